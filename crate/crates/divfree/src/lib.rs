//! Conservative low-degree finite elements for Stokes and biharmonic
//! problems on triangulations. Derived spaces (divergence-free kernel,
//! enriched linear, piecewise linear) are stored as sparse combinations of
//! smoothed BDFM degrees of freedom.

pub mod assembly;
pub mod combination;
pub mod dofmap;
pub mod el;
pub mod element;
pub mod error;
pub mod field;
pub mod generate;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod p1div;
pub mod pairs;
pub mod patch;
pub mod poly;
pub mod quadrature;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};
pub use generate::{generate_mesh, MeshKind};
pub use geometry::Point2;
pub use mesh::Triangulation;

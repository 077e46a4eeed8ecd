use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh has no cells")]
    EmptyMesh,
    #[error("cell {cell} references vertex {index}, but the mesh has {nv} vertices")]
    IndexOutOfRange { cell: usize, index: usize, nv: usize },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("edge ({0}, {1}) has more than two incident cells")]
    NonManifoldEdge(usize, usize),
    #[error("cell {0} is degenerate (zero area)")]
    DegenerateCell(usize),
    #[error("cell {0} duplicates cell {1}")]
    DuplicateCell(usize, usize),
    #[error("vertex {0} is a boundary vertex")]
    NotInterior(usize),
    #[error("cells around vertex {0} do not form a closed fan")]
    OpenFan(usize),
    #[error("cell {0} has a boundary edge")]
    NotInteriorCell(usize),
    #[error("cell {cell} is not part of the patch")]
    CellNotInPatch { cell: usize },
    #[error("perturbation inverted a cell after {attempts} attempts")]
    PerturbationFailed { attempts: usize },
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("boundary vertex {0} is not connected to any interior vertex")]
    AssumptionViolated(usize),
    #[error("interior edge {edge} joins two boundary vertices; refine the mesh once")]
    BoundaryChord { edge: usize },
    #[error("local V1 nullspace at vertex {vertex} has dimension {dim}, expected 3")]
    P1DivNullity { vertex: usize, dim: usize },
    #[error("point ({x}, {y}) lies outside the mesh")]
    PointOutside { x: f64, y: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("residual {0:e} above tolerance after iterative refinement")]
    Residual(f64),
}

impl Error {
    /// True for failures of a linear or eigen solve, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::Factorization(_) | Error::NoConvergence(_) | Error::Residual(_)
        )
    }
}

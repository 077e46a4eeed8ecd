//! Global numbering of the sBDFM degrees of freedom with homogeneous
//! boundary conditions: three DOFs per interior edge, edge-major.

use crate::element::{Orientation, NDOF};
use crate::mesh::Triangulation;

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    edge_base: Vec<Option<usize>>,
    interior_edges: Vec<usize>,
}

impl DofMap {
    pub fn new(tri: &Triangulation) -> DofMap {
        let mut edge_base = vec![None; tri.n_edges()];
        let interior_edges: Vec<usize> = tri.interior_edges().collect();
        for (k, &e) in interior_edges.iter().enumerate() {
            edge_base[e] = Some(3 * k);
        }
        DofMap {
            edge_base,
            interior_edges,
        }
    }

    pub fn dim(&self) -> usize {
        3 * self.interior_edges.len()
    }

    /// Index of the first DOF of edge `e`, `None` on the boundary.
    pub fn edge_base(&self, e: usize) -> Option<usize> {
        self.edge_base[e]
    }

    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }

    /// Edge and kind (0, 1, 2) of a global DOF.
    pub fn dof_edge(&self, dof: usize) -> (usize, usize) {
        (self.interior_edges[dof / 3], dof % 3)
    }

    /// Global index of each local DOF of cell `t` (`None` when constrained).
    pub fn cell_dofs(&self, tri: &Triangulation, t: usize) -> [Option<usize>; NDOF] {
        let mut out = [None; NDOF];
        for (i, &e) in tri.cell_edges(t).iter().enumerate() {
            if let Some(b) = self.edge_base[e] {
                for r in 0..3 {
                    out[3 * i + r] = Some(b + r);
                }
            }
        }
        out
    }

    /// Local DOFs of cell `t` read from a global vector, in the cell's
    /// global orientation.
    pub fn gather(&self, tri: &Triangulation, t: usize, x: &[f64]) -> [f64; NDOF] {
        let mut out = [0.0; NDOF];
        for (a, d) in self.cell_dofs(tri, t).iter().enumerate() {
            if let Some(g) = d {
                out[a] = x[*g];
            }
        }
        out
    }

    /// Same as [`DofMap::gather`], converted to the counterclockwise local
    /// orientation.
    pub fn gather_local(&self, tri: &Triangulation, t: usize, x: &[f64]) -> [f64; NDOF] {
        let o = Orientation::global(tri, t);
        let mut g = self.gather(tri, t, x);
        for (a, v) in g.iter_mut().enumerate() {
            *v *= o.dof_sign(a);
        }
        g
    }
}

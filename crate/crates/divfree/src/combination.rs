//! Derived bases expressed as sparse combinations of sBDFM DOFs.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use crate::dofmap::DofMap;
use crate::element::{dof_values, Orientation};
use crate::error::{Error, Result};
use crate::mesh::Triangulation;
use crate::poly::{CellFrame, ScalarPoly, VectorPoly};
use crate::sparse::{self, SpMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnLabel {
    Vertex(usize),
    Cell(usize),
    Edge(usize),
    /// Mode 0 and 1 are the Cartesian hats, mode 2 the third patch mode.
    VertexMode { vertex: usize, mode: usize },
}

impl fmt::Display for ColumnLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnLabel::Vertex(v) => write!(f, "vertex {v}"),
            ColumnLabel::Cell(t) => write!(f, "cell {t}"),
            ColumnLabel::Edge(e) => write!(f, "edge {e}"),
            ColumnLabel::VertexMode { vertex, mode } => write!(f, "vertex {vertex} mode {mode}"),
        }
    }
}

/// Cellwise polynomial pieces of one basis function. Contributions to the
/// same cell are summed.
#[derive(Debug, Clone, Default)]
pub struct Pieces<P> {
    pub cells: BTreeMap<usize, P>,
}

impl<P: Copy + std::ops::Add<Output = P>> Pieces<P> {
    pub fn new() -> Self {
        Pieces {
            cells: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, t: usize, p: P) {
        match self.cells.get_mut(&t) {
            Some(q) => *q = *q + p,
            None => {
                self.cells.insert(t, p);
            }
        }
    }

    pub fn support(&self) -> Vec<usize> {
        self.cells.keys().copied().collect()
    }
}

pub type VectorPieces = Pieces<VectorPoly>;
pub type ScalarPieces = Pieces<ScalarPoly>;

/// Global DOFs of a piecewise field. A DOF gets a value only when every
/// cell containing its edge carries a piece; the returned residual is the
/// largest disagreement between the two sides of any edge (a missing side
/// counts as zero), relative to the largest DOF magnitude.
pub fn pieces_to_dofs(tri: &Triangulation, dofmap: &DofMap, pieces: &VectorPieces) -> (Vec<(usize, f64)>, f64) {
    let mut seen: BTreeMap<usize, Vec<[f64; 3]>> = BTreeMap::new();
    for (&t, v) in &pieces.cells {
        let f = CellFrame::new(tri.cell_points(t));
        let d = dof_values(&f, Orientation::global(tri, t), v);
        for (i, &e) in tri.cell_edges(t).iter().enumerate() {
            seen.entry(e).or_default().push([d[3 * i], d[3 * i + 1], d[3 * i + 2]]);
        }
    }
    let mut scale: f64 = 0.0;
    let mut resid: f64 = 0.0;
    let mut out = Vec::new();
    for (e, vals) in &seen {
        for v in vals {
            scale = scale.max(v.iter().fold(0.0, |m, x| m.max(x.abs())));
        }
        let complete = dofmap.edge_base(*e).is_some() && vals.len() == 2;
        for r in 0..3 {
            let spread = if complete {
                (vals[0][r] - vals[1][r]).abs()
            } else {
                vals.iter().fold(0.0f64, |m, v| m.max(v[r].abs()))
            };
            resid = resid.max(spread);
            if complete {
                let v = 0.5 * (vals[0][r] + vals[1][r]);
                if v != 0.0 {
                    out.push((dofmap.edge_base(*e).unwrap() + r, v));
                }
            }
        }
    }
    let rel = if scale > 0.0 { resid / scale } else { 0.0 };
    (out, rel)
}

#[derive(Debug, Clone)]
pub struct CombinationMatrix {
    pub matrix: SpMat,
    pub labels: Vec<ColumnLabel>,
    /// Cells carrying a piece of each column.
    pub supports: Vec<Vec<usize>>,
    /// Largest relative inter-cell DOF mismatch seen while building.
    pub consistency: f64,
}

impl CombinationMatrix {
    pub fn from_pieces(
        tri: &Triangulation,
        dofmap: &DofMap,
        columns: Vec<(ColumnLabel, VectorPieces)>,
    ) -> Result<CombinationMatrix> {
        let mut trip = Vec::new();
        let mut labels = Vec::with_capacity(columns.len());
        let mut supports = Vec::with_capacity(columns.len());
        let mut consistency: f64 = 0.0;
        for (j, (label, p)) in columns.into_iter().enumerate() {
            let (entries, r) = pieces_to_dofs(tri, dofmap, &p);
            if entries.is_empty() {
                return Err(Error::InvalidParameter(format!("basis function for {label} has no DOFs")));
            }
            consistency = consistency.max(r);
            trip.extend(entries.into_iter().map(|(i, v)| (i, j, v)));
            labels.push(label);
            supports.push(p.support());
        }
        Ok(CombinationMatrix {
            matrix: sparse::from_triplets(dofmap.dim(), labels.len(), &trip),
            labels,
            supports,
            consistency,
        })
    }

    pub fn from_entries(
        nrows: usize,
        labels: Vec<ColumnLabel>,
        supports: Vec<Vec<usize>>,
        entries: &[(usize, usize, f64)],
    ) -> CombinationMatrix {
        CombinationMatrix {
            matrix: sparse::from_triplets(nrows, labels.len(), entries),
            labels,
            supports,
            consistency: 0.0,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// sBDFM coefficients of column `j`.
    pub fn column_dense(&self, j: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n_rows()];
        for (i, v) in sparse::column(&self.matrix, j) {
            x[i] = v;
        }
        x
    }

    /// `C x`, the sBDFM coefficients of a combination.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        sparse::matvec(&self.matrix, x)
    }

    /// `C^T y`.
    pub fn restrict(&self, y: &[f64]) -> Vec<f64> {
        sparse::matvec_t(&self.matrix, y)
    }

    pub fn position(&self, label: ColumnLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Coordinate text export with a label comment per column.
    pub fn write_coo(&self, mut w: impl Write) -> Result<()> {
        for (j, l) in self.labels.iter().enumerate() {
            writeln!(w, "# column {j}: {l}")?;
        }
        sparse::write_coo(&self.matrix, w)
    }
}

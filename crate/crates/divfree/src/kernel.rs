//! Locally supported divergence-free basis: one function per interior
//! vertex (supported on its patch) and one per interior cell (supported on
//! the cell and its three neighbours), with their stream-function
//! potentials.

use faer::linalg::solvers::SolveLstsqCore;
use faer::{Conj, Mat};

use crate::assembly::local_div_p1;
use crate::combination::{pieces_to_dofs, ColumnLabel, CombinationMatrix, ScalarPieces, VectorPieces};
use crate::dofmap::DofMap;
use crate::element::{dof_values, nodal_basis, potential_edge, w_edge, w_pair, Orientation};
use crate::error::{Error, Result};
use crate::mesh::Triangulation;
use crate::patch::{cell_patch, check_assumption1, patch_geometry, vertex_patch, CellPatch, VertexPatch};
use crate::poly::{CellFrame, ScalarPoly};

pub(crate) fn frame(tri: &Triangulation, t: usize) -> CellFrame {
    CellFrame::new(tri.cell_points(t))
}

pub(crate) fn loc(tri: &Triangulation, t: usize, v: usize) -> usize {
    tri.local_index(t, v).expect("vertex belongs to cell")
}

/// Local index in `t` of the vertex opposite edge `e`.
pub(crate) fn opposite(tri: &Triangulation, t: usize, e: usize) -> usize {
    tri.cell_edges(t).iter().position(|&x| x == e).expect("edge belongs to cell")
}

fn rim_coefficients(tri: &Triangulation, p: &VertexPatch) -> Vec<f64> {
    (0..p.len()).map(|i| patch_geometry(tri, p, i)).collect()
}

/// Pieces of the vertex function on its patch.
pub fn psi_vertex(tri: &Triangulation, p: &VertexPatch) -> VectorPieces {
    let m = p.len();
    let c = rim_coefficients(tri, p);
    let mut out = VectorPieces::new();
    for i in 0..m {
        let t = p.cells[i];
        let f = frame(tri, t);
        let prev = p.rim_at(i as isize - 1);
        let v = w_edge(&f, loc(tri, t, prev)) * c[i]
            + w_edge(&f, loc(tri, t, p.rim[i])) * c[(i + m - 1) % m]
            + w_pair(&f, loc(tri, t, p.center));
        out.add(t, v);
    }
    out
}

/// Potential of [`psi_vertex`].
pub fn zeta_vertex(tri: &Triangulation, p: &VertexPatch) -> ScalarPieces {
    let m = p.len();
    let c = rim_coefficients(tri, p);
    let mut out = ScalarPieces::new();
    for i in 0..m {
        let t = p.cells[i];
        let o = ScalarPoly::lambda(loc(tri, t, p.center));
        let prev = p.rim_at(i as isize - 1);
        let z = o * o
            + potential_edge(loc(tri, t, prev)) * c[i]
            + potential_edge(loc(tri, t, p.rim[i])) * c[(i + m - 1) % m];
        out.add(t, z);
    }
    out
}

fn cell_weights(p: &CellPatch) -> [f64; 3] {
    let s0 = p.areas[0];
    [0, 1, 2].map(|j| p.areas[j + 1] / (p.areas[j + 1] + s0))
}

/// Pieces of the cell function on the cell and its neighbours.
pub fn psi_cell(tri: &Triangulation, p: &CellPatch) -> VectorPieces {
    let t0 = p.center;
    let s0 = p.areas[0];
    let f0 = frame(tri, t0);
    let wts = cell_weights(p);
    let mut out = VectorPieces::new();
    for j in 0..3 {
        let e = tri.cell_edges(t0)[j];
        let tj = p.neighbors[j];
        let sj = p.areas[j + 1];
        out.add(tj, w_edge(&frame(tri, tj), opposite(tri, tj, e)) * wts[j]);
        out.add(
            t0,
            w_edge(&f0, j) * ((sj - 2.0 * s0) / (3.0 * (sj + s0))) + w_pair(&f0, j) * (1.0 / 3.0),
        );
    }
    out
}

/// Potential of [`psi_cell`].
pub fn zeta_cell(tri: &Triangulation, p: &CellPatch) -> ScalarPieces {
    let t0 = p.center;
    let wts = cell_weights(p);
    let mut out = ScalarPieces::new();
    let bubble = ScalarPoly::lambda(0) * ScalarPoly::lambda(1) * ScalarPoly::lambda(2);
    let mut z0 = bubble * -6.0;
    for j in 0..3 {
        let e = tri.cell_edges(t0)[j];
        let tj = p.neighbors[j];
        out.add(tj, potential_edge(opposite(tri, tj, e)) * wts[j]);
        z0 += potential_edge(j) * wts[j];
    }
    out.add(t0, z0);
    out
}

/// Patch context for [`zeta_local`].
#[derive(Debug, Clone, Copy)]
pub enum PatchRef<'a> {
    Vertex(&'a VertexPatch),
    Cell(&'a CellPatch),
}

/// The cubic piece of a potential on one cell of its patch.
pub fn zeta_local(tri: &Triangulation, patch: PatchRef<'_>, cell: usize) -> Result<ScalarPoly> {
    let pieces = match patch {
        PatchRef::Vertex(p) => zeta_vertex(tri, p),
        PatchRef::Cell(p) => zeta_cell(tri, p),
    };
    pieces.cells.get(&cell).copied().ok_or(Error::CellNotInPatch { cell })
}

fn kernel_pieces(tri: &Triangulation) -> Result<Vec<(ColumnLabel, VectorPieces, ScalarPieces)>> {
    check_assumption1(tri)?;
    let mut cols = Vec::new();
    for v in tri.interior_vertices() {
        let p = vertex_patch(tri, v)?;
        cols.push((ColumnLabel::Vertex(v), psi_vertex(tri, &p), zeta_vertex(tri, &p)));
    }
    for t in tri.interior_cells() {
        let p = cell_patch(tri, t)?;
        cols.push((ColumnLabel::Cell(t), psi_cell(tri, &p), zeta_cell(tri, &p)));
    }
    Ok(cols)
}

/// Basis of the discretely divergence-free sBDFM functions: interior
/// vertices first, then interior cells, both in index order.
pub fn build_kernel_basis(tri: &Triangulation, dofmap: &DofMap) -> Result<CombinationMatrix> {
    let cols = kernel_pieces(tri)?.into_iter().map(|(l, v, _)| (l, v)).collect();
    CombinationMatrix::from_pieces(tri, dofmap, cols)
}

/// Piecewise cubic potentials whose curls are the kernel basis columns, in
/// the same order.
#[derive(Debug, Clone)]
pub struct PotentialBasis {
    pub labels: Vec<ColumnLabel>,
    pub pieces: Vec<ScalarPieces>,
}

impl PotentialBasis {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Cellwise polynomial of the combination with coefficients `x`.
    pub fn cell_polys(&self, n_cells: usize, x: &[f64]) -> Vec<ScalarPoly> {
        let mut out = vec![ScalarPoly::zero(); n_cells];
        for (p, &c) in self.pieces.iter().zip(x) {
            if c == 0.0 {
                continue;
            }
            for (&t, z) in &p.cells {
                out[t] += z.scale(c);
            }
        }
        out
    }
}

pub fn build_potential_basis(tri: &Triangulation) -> Result<PotentialBasis> {
    let (labels, pieces) = kernel_pieces(tri)?.into_iter().map(|(l, _, z)| (l, z)).unzip();
    Ok(PotentialBasis { labels, pieces })
}

/// Change-of-basis matrix from the generators on an interior cell
/// `(w_pair 0..2, w_edge 0..2)` to the restrictions of the kernel columns
/// `psi^{A_1}, psi^{A_2}, psi_{T_0}, psi_{T_1..3}` (local vertex 0 left out).
#[derive(Debug, Clone)]
pub struct IndependenceCheck {
    pub matrix: Mat<f64>,
    pub determinant: f64,
    /// `(1/3) prod S_0 / (S_0 + S_j)`.
    pub expected: f64,
    /// Largest least-squares misfit of a restriction against the generators.
    pub fit_residual: f64,
}

/// `None` when local vertices 1, 2 or one of the neighbours is not interior.
pub fn independence_matrix(
    tri: &Triangulation,
    dofmap: &DofMap,
    kernel: &CombinationMatrix,
    t0: usize,
) -> Result<Option<IndependenceCheck>> {
    let Ok(cp) = cell_patch(tri, t0) else {
        return Ok(None);
    };
    let c = tri.cell(t0);
    let mut labels = vec![ColumnLabel::Vertex(c[1]), ColumnLabel::Vertex(c[2]), ColumnLabel::Cell(t0)];
    labels.extend(cp.neighbors.iter().map(|&t| ColumnLabel::Cell(t)));
    let mut cols = Vec::with_capacity(6);
    for l in labels {
        match kernel.position(l) {
            Some(j) => cols.push(j),
            None => return Ok(None),
        }
    }
    let f = frame(tri, t0);
    let gens = [
        w_pair(&f, 0),
        w_pair(&f, 1),
        w_pair(&f, 2),
        w_edge(&f, 0),
        w_edge(&f, 1),
        w_edge(&f, 2),
    ];
    let mut g = Mat::<f64>::zeros(9, 6);
    for (k, v) in gens.iter().enumerate() {
        let d = dof_values(&f, Orientation::LOCAL, v);
        for r in 0..9 {
            g[(r, k)] = d[r];
        }
    }
    let mut rhs = Mat::<f64>::zeros(9, 6);
    for (k, &j) in cols.iter().enumerate() {
        let d = dofmap.gather_local(tri, t0, &kernel.column_dense(j));
        for r in 0..9 {
            rhs[(r, k)] = d[r];
        }
    }
    let qr = g.qr();
    let mut sol = rhs.clone();
    qr.solve_lstsq_in_place_with_conj(Conj::No, sol.as_mut());
    let coef = sol.subrows(0, 6).to_owned();
    let fit = &g * &coef - &rhs;
    let mut fit_residual: f64 = 0.0;
    for j in 0..6 {
        for i in 0..9 {
            fit_residual = fit_residual.max(fit[(i, j)].abs());
        }
    }
    // rows are functions, columns generators
    let matrix = coef.transpose().to_owned();
    let determinant = matrix.determinant();
    let s0 = cp.areas[0];
    let expected = (1.0 / 3.0) * (1..4).map(|j| s0 / (s0 + cp.areas[j])).product::<f64>();
    Ok(Some(IndependenceCheck {
        matrix,
        determinant,
        expected,
        fit_residual,
    }))
}

/// Divergence of the spoke DOFs of a vertex patch against piecewise linear
/// pressures on the patch cells, with all rim DOFs fixed to zero. Column
/// `3 i + r` is DOF `r` of spoke `i` in its global orientation; row
/// `3 k + l` tests cell `k` with its barycentric coordinate `l`.
pub fn patch_divergence_matrix(tri: &Triangulation, p: &VertexPatch) -> Mat<f64> {
    let m = p.len();
    let mut out = Mat::<f64>::zeros(3 * m, 3 * m);
    for (k, &t) in p.cells.iter().enumerate() {
        let f = frame(tri, t);
        let basis = nodal_basis(&f, Orientation::global(tri, t));
        let d = local_div_p1(&f, &basis);
        for (i, &e) in tri.cell_edges(t).iter().enumerate() {
            let Some(s) = p.spokes.iter().position(|&x| x == e) else {
                continue;
            };
            for r in 0..3 {
                for l in 0..3 {
                    out[(3 * k + l, 3 * s + r)] += d[l][3 * i + r];
                }
            }
        }
    }
    out
}

/// Spoke DOFs of the vertex function, ordered as the columns of
/// [`patch_divergence_matrix`].
pub fn psi_vertex_spoke_dofs(tri: &Triangulation, p: &VertexPatch) -> Vec<f64> {
    let pieces = psi_vertex(tri, p);
    let dm = DofMap::new(tri);
    let (entries, _) = pieces_to_dofs(tri, &dm, &pieces);
    let mut out = vec![0.0; 3 * p.len()];
    for (g, v) in entries {
        let (e, r) = dm.dof_edge(g);
        if let Some(s) = p.spokes.iter().position(|&x| x == e) {
            out[3 * s + r] = v;
        }
    }
    out
}

//! The piecewise linear subspace of sBDFM: per interior vertex two
//! Cartesian hats and one extra mode found from a local nullspace.

use faer::Mat;

use crate::combination::{pieces_to_dofs, ColumnLabel, CombinationMatrix, VectorPieces};
use crate::dofmap::DofMap;
use crate::element::{dof_values, Orientation};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::kernel::{frame, loc};
use crate::mesh::Triangulation;
use crate::patch::{vertex_patch, VertexPatch};
use crate::poly::{ScalarPoly, VectorPoly};

const NULL_TOL: f64 = 1e-10;

/// `l_v e` on every cell around `v`.
pub fn hat(tri: &Triangulation, v: usize, e: Point2) -> VectorPieces {
    let mut out = VectorPieces::new();
    for &t in tri.vertex_cells(v) {
        out.add(t, VectorPoly::times_vector(ScalarPoly::lambda(loc(tri, t, v)), e));
    }
    out
}

fn linear_fields() -> [VectorPoly; 6] {
    let ex = Point2::new(1.0, 0.0);
    let ey = Point2::new(0.0, 1.0);
    let l = ScalarPoly::lambda;
    [
        VectorPoly::times_vector(l(0), ex),
        VectorPoly::times_vector(l(1), ex),
        VectorPoly::times_vector(l(2), ex),
        VectorPoly::times_vector(l(0), ey),
        VectorPoly::times_vector(l(1), ey),
        VectorPoly::times_vector(l(2), ey),
    ]
}

/// Rows spanning the annihilator of the DOF image of the linear fields on
/// cell `t` (3 x 9, global orientation).
fn p1_constraints(tri: &Triangulation, t: usize) -> Mat<f64> {
    let f = frame(tri, t);
    let o = Orientation::global(tri, t);
    let mut d = Mat::<f64>::zeros(9, 6);
    for (k, v) in linear_fields().iter().enumerate() {
        let dv = dof_values(&f, o, v);
        for r in 0..9 {
            d[(r, k)] = dv[r];
        }
    }
    let svd = d.svd().expect("svd of a 9x6 matrix");
    svd.U().subcols(6, 3).transpose().to_owned()
}

/// Orthonormal basis of the spoke-DOF vectors of the patch that are
/// piecewise linear, with rim DOFs zero. Columns indexed `3 i + r`.
pub fn patch_p1_nullspace(tri: &Triangulation, p: &VertexPatch) -> Mat<f64> {
    let m = p.len();
    let mut c = Mat::<f64>::zeros(3 * m, 3 * m);
    for (k, &t) in p.cells.iter().enumerate() {
        let n = p1_constraints(tri, t);
        for (i, &e) in tri.cell_edges(t).iter().enumerate() {
            let Some(s) = p.spokes.iter().position(|&x| x == e) else {
                continue;
            };
            for row in 0..3 {
                for r in 0..3 {
                    c[(3 * k + row, 3 * s + r)] += n[(row, 3 * i + r)];
                }
            }
        }
    }
    let svd = c.svd().expect("svd of a patch constraint matrix");
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).map(|i| s[i]).fold(0.0, f64::max);
    let rank = (0..s.nrows()).filter(|&i| s[i] > NULL_TOL * smax).count();
    svd.V().subcols(rank, 3 * m - rank).to_owned()
}

fn spoke_vector(tri: &Triangulation, dm: &DofMap, p: &VertexPatch, pieces: &VectorPieces) -> Vec<f64> {
    let (entries, _) = pieces_to_dofs(tri, dm, pieces);
    let mut out = vec![0.0; 3 * p.len()];
    for (g, v) in entries {
        let (e, r) = dm.dof_edge(g);
        if let Some(s) = p.spokes.iter().position(|&x| x == e) {
            out[3 * s + r] = v;
        }
    }
    out
}

/// The third mode of vertex `v` on its spoke DOFs: the patch nullspace
/// direction orthogonal to both hats, scaled so its largest entry is +1.
pub fn third_mode(tri: &Triangulation, dm: &DofMap, p: &VertexPatch) -> Result<Vec<f64>> {
    let z = patch_p1_nullspace(tri, p);
    if z.ncols() != 3 {
        return Err(Error::P1DivNullity {
            vertex: p.center,
            dim: z.ncols(),
        });
    }
    let n = z.nrows();
    let hx = spoke_vector(tri, dm, p, &hat(tri, p.center, Point2::new(1.0, 0.0)));
    let hy = spoke_vector(tri, dm, p, &hat(tri, p.center, Point2::new(0.0, 1.0)));
    let mut h = Mat::<f64>::zeros(n, 2);
    for i in 0..n {
        h[(i, 0)] = hx[i];
        h[(i, 1)] = hy[i];
    }
    let q = h.qr().compute_thin_Q();
    // remove the hat directions from the nullspace basis
    let r = &z - &q * (q.transpose() * &z);
    let svd = r.svd().expect("svd of the reduced nullspace");
    let u = svd.U().col(0);
    let mut mode: Vec<f64> = (0..n).map(|i| u[i]).collect();
    let (imax, _) = mode
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
    let s = 1.0 / mode[imax];
    for x in &mut mode {
        *x *= s;
    }
    Ok(mode)
}

/// Basis of the piecewise linear sBDFM subspace: for each interior vertex,
/// in index order, the x-hat, the y-hat and the third mode.
pub fn build_p1div_space(tri: &Triangulation, dm: &DofMap) -> Result<CombinationMatrix> {
    let mut trip = Vec::new();
    let mut labels = Vec::new();
    let mut supports = Vec::new();
    for v in tri.interior_vertices() {
        let p = vertex_patch(tri, v)?;
        for (mode, e) in [Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)].into_iter().enumerate() {
            let j = labels.len();
            let (entries, _) = pieces_to_dofs(tri, dm, &hat(tri, v, e));
            trip.extend(entries.into_iter().map(|(i, x)| (i, j, x)));
            labels.push(ColumnLabel::VertexMode { vertex: v, mode });
            supports.push(p.cells.clone());
        }
        let j = labels.len();
        let mode = third_mode(tri, dm, &p)?;
        for (s, &e) in p.spokes.iter().enumerate() {
            let base = dm.edge_base(e).expect("spokes of an interior vertex are interior");
            for r in 0..3 {
                if mode[3 * s + r] != 0.0 {
                    trip.push((base + r, j, mode[3 * s + r]));
                }
            }
        }
        labels.push(ColumnLabel::VertexMode { vertex: v, mode: 2 });
        supports.push(p.cells.clone());
    }
    Ok(CombinationMatrix::from_entries(dm.dim(), labels, supports, &trip))
}

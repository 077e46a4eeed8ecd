//! Sparse operators on the sBDFM space and its pressure partners, loads,
//! congruence reductions onto derived bases, and error norms.

use crate::combination::CombinationMatrix;
use crate::dofmap::DofMap;
use crate::element::{nodal_basis, tabulate, Orientation, NDOF};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::kernel::PotentialBasis;
use crate::mesh::Triangulation;
use crate::poly::{monomial_values, CellFrame, VectorPoly};
use crate::quadrature::{triangle_degree6, triangle_high};
use crate::sparse::{self, SpMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    GradGrad,
    Mass,
    Div,
    PressureMass,
    Reduced,
}

#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub matrix: SpMat,
    pub symmetric: bool,
    pub provenance: Provenance,
}

impl SparseOperator {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Discontinuous pressure spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureKind {
    /// One constant per cell.
    P0,
    /// Linear per cell, basis `l_0, l_1, l_2`; DOF `3 t + i`.
    P1,
}

impl PressureKind {
    pub fn per_cell(self) -> usize {
        match self {
            PressureKind::P0 => 1,
            PressureKind::P1 => 3,
        }
    }

    pub fn dim(self, tri: &Triangulation) -> usize {
        self.per_cell() * tri.n_cells()
    }
}

/// Nodal basis of cell `t` in its global DOF orientation.
pub fn cell_basis(tri: &Triangulation, t: usize) -> (CellFrame, [VectorPoly; NDOF]) {
    let f = CellFrame::new(tri.cell_points(t));
    let b = nodal_basis(&f, Orientation::global(tri, t));
    (f, b)
}

/// `int_T div(phi_a) l_i` for the three barycentric test functions.
pub fn local_div_p1(f: &CellFrame, basis: &[VectorPoly; NDOF]) -> [[f64; NDOF]; 3] {
    let tab = tabulate(f, basis, triangle_degree6());
    let rule = triangle_degree6();
    let mut out = [[0.0; NDOF]; 3];
    for q in 0..tab.weights.len() {
        let l = rule.points[q];
        for i in 0..3 {
            for a in 0..NDOF {
                out[i][a] += tab.weights[q] * tab.divs[q][a] * l[i];
            }
        }
    }
    out
}

fn scatter(
    trip: &mut Vec<(usize, usize, f64)>,
    rows: &[Option<usize>; NDOF],
    cols: &[Option<usize>; NDOF],
    k: &[[f64; NDOF]; NDOF],
) {
    for a in 0..NDOF {
        let Some(i) = rows[a] else { continue };
        for b in 0..NDOF {
            if let Some(j) = cols[b] {
                trip.push((i, j, k[a][b]));
            }
        }
    }
}

/// Broken `(grad u, grad v)`.
pub fn assemble_gradgrad(tri: &Triangulation, dofmap: &DofMap) -> SparseOperator {
    let mut trip = Vec::with_capacity(81 * tri.n_cells());
    for t in 0..tri.n_cells() {
        let (f, basis) = cell_basis(tri, t);
        let tab = tabulate(&f, &basis, triangle_degree6());
        let mut k = [[0.0; NDOF]; NDOF];
        for q in 0..tab.weights.len() {
            let g = &tab.grads[q];
            for a in 0..NDOF {
                for b in 0..NDOF {
                    k[a][b] += tab.weights[q] * (g[a][0].dot(g[b][0]) + g[a][1].dot(g[b][1]));
                }
            }
        }
        let d = dofmap.cell_dofs(tri, t);
        scatter(&mut trip, &d, &d, &k);
    }
    SparseOperator {
        matrix: sparse::from_triplets(dofmap.dim(), dofmap.dim(), &trip),
        symmetric: true,
        provenance: Provenance::GradGrad,
    }
}

/// `(u, v)`.
pub fn assemble_mass(tri: &Triangulation, dofmap: &DofMap) -> SparseOperator {
    let mut trip = Vec::with_capacity(81 * tri.n_cells());
    for t in 0..tri.n_cells() {
        let (f, basis) = cell_basis(tri, t);
        let tab = tabulate(&f, &basis, triangle_degree6());
        let mut k = [[0.0; NDOF]; NDOF];
        for q in 0..tab.weights.len() {
            let v = &tab.values[q];
            for a in 0..NDOF {
                for b in 0..NDOF {
                    k[a][b] += tab.weights[q] * v[a].dot(v[b]);
                }
            }
        }
        let d = dofmap.cell_dofs(tri, t);
        scatter(&mut trip, &d, &d, &k);
    }
    SparseOperator {
        matrix: sparse::from_triplets(dofmap.dim(), dofmap.dim(), &trip),
        symmetric: true,
        provenance: Provenance::Mass,
    }
}

/// `(div v, q)`: rows pressure DOFs, columns velocity DOFs.
pub fn assemble_div(tri: &Triangulation, dofmap: &DofMap, kind: PressureKind) -> SparseOperator {
    let mut trip = Vec::new();
    for t in 0..tri.n_cells() {
        let (f, basis) = cell_basis(tri, t);
        let d = local_div_p1(&f, &basis);
        let cols = dofmap.cell_dofs(tri, t);
        for (a, c) in cols.iter().enumerate() {
            let Some(j) = c else { continue };
            match kind {
                PressureKind::P0 => trip.push((t, *j, d[0][a] + d[1][a] + d[2][a])),
                PressureKind::P1 => {
                    for (i, row) in d.iter().enumerate() {
                        trip.push((3 * t + i, *j, row[a]));
                    }
                }
            }
        }
    }
    SparseOperator {
        matrix: sparse::from_triplets(kind.dim(tri), dofmap.dim(), &trip),
        symmetric: false,
        provenance: Provenance::Div,
    }
}

pub fn assemble_pressure_mass(tri: &Triangulation, kind: PressureKind) -> SparseOperator {
    let mut trip = Vec::new();
    for t in 0..tri.n_cells() {
        let s = tri.cell_area(t);
        match kind {
            PressureKind::P0 => trip.push((t, t, s)),
            PressureKind::P1 => {
                for i in 0..3 {
                    for j in 0..3 {
                        let v = if i == j { s / 6.0 } else { s / 12.0 };
                        trip.push((3 * t + i, 3 * t + j, v));
                    }
                }
            }
        }
    }
    SparseOperator {
        matrix: sparse::from_triplets(kind.dim(tri), kind.dim(tri), &trip),
        symmetric: true,
        provenance: Provenance::PressureMass,
    }
}

/// Integrals of the pressure basis functions.
pub fn pressure_mean(tri: &Triangulation, kind: PressureKind) -> Vec<f64> {
    let mut out = Vec::with_capacity(kind.dim(tri));
    for t in 0..tri.n_cells() {
        let s = tri.cell_area(t);
        match kind {
            PressureKind::P0 => out.push(s),
            PressureKind::P1 => out.extend([s / 3.0; 3]),
        }
    }
    out
}

/// `(f, phi_a)` with the high-order rule.
pub fn assemble_load(tri: &Triangulation, dofmap: &DofMap, f: &dyn Fn(Point2) -> Point2) -> Vec<f64> {
    let rule = triangle_high();
    let mut out = vec![0.0; dofmap.dim()];
    for t in 0..tri.n_cells() {
        let d = dofmap.cell_dofs(tri, t);
        if d.iter().all(Option::is_none) {
            continue;
        }
        let (fr, basis) = cell_basis(tri, t);
        let mut loc = [0.0; NDOF];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let fv = f(fr.point_at(*l));
            let mv = monomial_values(*l);
            for a in 0..NDOF {
                let v = Point2::new(basis[a].x.dot_values(&mv), basis[a].y.dot_values(&mv));
                loc[a] += w * fv.dot(v);
            }
        }
        for a in 0..NDOF {
            if let Some(g) = d[a] {
                out[g] += loc[a] * fr.area;
            }
        }
    }
    out
}

/// `(g, zeta_k)` for every potential column.
pub fn assemble_potential_load(tri: &Triangulation, pot: &PotentialBasis, g: &dyn Fn(Point2) -> f64) -> Vec<f64> {
    let rule = triangle_high();
    // cache g at the quadrature points of each cell on first use
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; tri.n_cells()];
    let mvs: Vec<_> = rule.points.iter().map(|&l| monomial_values(l)).collect();
    pot.pieces
        .iter()
        .map(|p| {
            p.cells
                .iter()
                .map(|(&t, z)| {
                    let gv = cache[t].get_or_insert_with(|| {
                        let f = CellFrame::new(tri.cell_points(t));
                        rule.points.iter().map(|&l| g(f.point_at(l))).collect()
                    });
                    let s: f64 = rule
                        .weights
                        .iter()
                        .zip(gv.iter())
                        .zip(&mvs)
                        .map(|((w, gq), mv)| w * gq * z.dot_values(mv))
                        .sum();
                    s * tri.cell_area(t)
                })
                .sum()
        })
        .collect()
}

/// `C^T A C`.
pub fn reduce(op: &SparseOperator, c: &CombinationMatrix) -> Result<SparseOperator> {
    Ok(SparseOperator {
        matrix: sparse::congruence(&c.matrix, &op.matrix, &c.matrix)?,
        symmetric: op.symmetric,
        provenance: Provenance::Reduced,
    })
}

/// `B C` for an operator whose columns are sBDFM DOFs.
pub fn reduce_columns(op: &SparseOperator, c: &CombinationMatrix) -> Result<SparseOperator> {
    Ok(SparseOperator {
        matrix: sparse::product(&op.matrix, &c.matrix)?,
        symmetric: false,
        provenance: Provenance::Reduced,
    })
}

/// `C^T v`.
pub fn reduce_load(v: &[f64], c: &CombinationMatrix) -> Result<Vec<f64>> {
    if v.len() != c.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "load of length {} against {} rows",
            v.len(),
            c.n_rows()
        )));
    }
    Ok(c.restrict(v))
}

pub trait VectorField {
    fn value(&self, p: Point2) -> Point2;
    /// `[grad u_x, grad u_y]`.
    fn gradient(&self, p: Point2) -> [Point2; 2];
}

pub trait ScalarField {
    fn value(&self, p: Point2) -> f64;
    fn gradient(&self, p: Point2) -> Point2;
    fn hessian(&self, p: Point2) -> [[f64; 2]; 2];
}

/// A vector field given by a pair of closures.
pub struct FnVectorField<F, G>(pub F, pub G);

impl<F, G> VectorField for FnVectorField<F, G>
where
    F: Fn(Point2) -> Point2,
    G: Fn(Point2) -> [Point2; 2],
{
    fn value(&self, p: Point2) -> Point2 {
        (self.0)(p)
    }

    fn gradient(&self, p: Point2) -> [Point2; 2] {
        (self.1)(p)
    }
}

/// Cellwise error norms; each entry is a norm, not its square.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorReport {
    pub l2: f64,
    pub h1_semi: f64,
    pub h2_semi: Option<f64>,
    pub div_l2: f64,
}

/// Errors of the sBDFM field with coefficients `x` against `exact`;
/// `div_l2` is the norm of the discrete divergence alone.
pub fn velocity_error(tri: &Triangulation, dofmap: &DofMap, x: &[f64], exact: &dyn VectorField) -> ErrorReport {
    let rule = triangle_high();
    let (mut l2, mut h1, mut dv) = (0.0, 0.0, 0.0);
    for t in 0..tri.n_cells() {
        let (f, basis) = cell_basis(tri, t);
        let c = dofmap.gather(tri, t, x);
        let mut v = VectorPoly::zero();
        for a in 0..NDOF {
            if c[a] != 0.0 {
                v += basis[a].scale(c[a]);
            }
        }
        let g = v.grad(&f);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let p = f.point_at(*l);
            let mv = monomial_values(*l);
            let uh = Point2::new(v.x.dot_values(&mv), v.y.dot_values(&mv));
            let gh = [
                Point2::new(g[0][0].dot_values(&mv), g[0][1].dot_values(&mv)),
                Point2::new(g[1][0].dot_values(&mv), g[1][1].dot_values(&mv)),
            ];
            let u = exact.value(p);
            let gu = exact.gradient(p);
            let e = u - uh;
            let e0 = gu[0] - gh[0];
            let e1 = gu[1] - gh[1];
            let wa = w * f.area;
            l2 += wa * e.dot(e);
            h1 += wa * (e0.dot(e0) + e1.dot(e1));
            let d = gh[0].x + gh[1].y;
            dv += wa * d * d;
        }
    }
    ErrorReport {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
        h2_semi: None,
        div_l2: dv.sqrt(),
    }
}

/// `||p - p_h||_0` for a discontinuous pressure.
pub fn pressure_error(tri: &Triangulation, kind: PressureKind, x: &[f64], exact: &dyn Fn(Point2) -> f64) -> f64 {
    let rule = triangle_high();
    let mut s = 0.0;
    for t in 0..tri.n_cells() {
        let f = CellFrame::new(tri.cell_points(t));
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let ph = match kind {
                PressureKind::P0 => x[t],
                PressureKind::P1 => (0..3).map(|i| x[3 * t + i] * l[i]).sum(),
            };
            let e = exact(f.point_at(*l)) - ph;
            s += w * f.area * e * e;
        }
    }
    s.sqrt()
}

/// Errors of the potential combination `x` against `exact`, including the
/// broken H2 seminorm.
pub fn potential_error(tri: &Triangulation, pot: &PotentialBasis, x: &[f64], exact: &dyn ScalarField) -> ErrorReport {
    let rule = triangle_high();
    let polys = pot.cell_polys(tri.n_cells(), x);
    let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for (t, z) in polys.iter().enumerate() {
        let f = CellFrame::new(tri.cell_points(t));
        let g = z.grad(&f);
        let h = z.hessian(&f);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let p = f.point_at(*l);
            let mv = monomial_values(*l);
            let wa = w * f.area;
            let e = exact.value(p) - z.dot_values(&mv);
            let ge = exact.gradient(p) - Point2::new(g[0].dot_values(&mv), g[1].dot_values(&mv));
            let he = exact.hessian(p);
            let mut hs = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let d = he[i][j] - h[i][j].dot_values(&mv);
                    hs += d * d;
                }
            }
            l2 += wa * e * e;
            h1 += wa * ge.dot(ge);
            h2 += wa * hs;
        }
    }
    ErrorReport {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
        h2_semi: Some(h2.sqrt()),
        div_l2: 0.0,
    }
}

//! The sBDFM element on one cell: generators of the local spaces, edge
//! degrees of freedom, and the nodal basis.
//!
//! DOF layout per cell: index `3 i + r` for local edge `i` (opposite local
//! vertex `i`) and kind `r` = 0 (normal mean), 1 (first normal moment),
//! 2 (tangential mean).

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use crate::geometry::Point2;
use crate::mesh::Triangulation;
use crate::poly::{CellFrame, ScalarPoly, VectorPoly};
use crate::quadrature::{edge_degree5, EdgeRule, TriangleRule};

pub const NDOF: usize = 9;

fn lam(i: usize) -> ScalarPoly {
    ScalarPoly::lambda(i)
}

/// `w_{T,e_i} = curl(l_j l_k (3 l_i - 1))`.
pub fn w_edge(f: &CellFrame, i: usize) -> VectorPoly {
    potential_edge(i).curl(f)
}

/// `l_j l_k (3 l_i - 1)`, the potential of [`w_edge`].
pub fn potential_edge(i: usize) -> ScalarPoly {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    lam(j) * lam(k) * (lam(i) * 3.0 - ScalarPoly::constant(1.0))
}

/// `w_{T,e_j,e_k} = curl(l_i^2)`.
pub fn w_pair(f: &CellFrame, i: usize) -> VectorPoly {
    (lam(i) * lam(i)).curl(f)
}

/// `y_{T,e_j,e_k} = -(2 / d_i) l_i n_i`, whose divergence is `1 / S`.
pub fn y_pair(f: &CellFrame, i: usize) -> VectorPoly {
    VectorPoly::times_vector(lam(i), f.normal[i] * (-2.0 / f.edge_len[i]))
}

/// Basis of `P^{2-}`: the six linear fields `l_i e_x`, `l_i e_y`, then the
/// tangential edge bubbles `l_j l_k t_i`.
pub fn p2minus_spanning_set(f: &CellFrame) -> [VectorPoly; 9] {
    let mut out = [VectorPoly::zero(); 9];
    for i in 0..3 {
        out[i] = VectorPoly::times_vector(lam(i), Point2::new(1.0, 0.0));
        out[3 + i] = VectorPoly::times_vector(lam(i), Point2::new(0.0, 1.0));
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        out[6 + i] = VectorPoly::times_vector(lam(j) * lam(k), f.tangent[i]);
    }
    out
}

/// Orientation of the edge DOFs of one cell: `signs[i] = +1` when edge `i`
/// is measured counterclockwise, `-1` when reversed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub signs: [f64; 3],
}

impl Orientation {
    pub const LOCAL: Orientation = Orientation { signs: [1.0; 3] };

    pub fn global(tri: &Triangulation, t: usize) -> Orientation {
        Orientation {
            signs: tri.cell_edge_signs(t),
        }
    }

    /// Factor converting a counterclockwise-measured DOF to this orientation.
    pub fn dof_sign(&self, k: usize) -> f64 {
        if k % 3 == 1 {
            1.0
        } else {
            self.signs[k / 3]
        }
    }
}

/// Edge moments of a field given pointwise in barycentric coordinates:
/// `(1/|e|) int v.n`, `(3/|e|) int v.n s`, `(1/|e|) int v.t`, with `s` in
/// [-1, 1] along the DOF direction.
pub fn dof_values_with<F>(f: &CellFrame, orient: Orientation, rule: &EdgeRule, field: F) -> [f64; NDOF]
where
    F: Fn([f64; 3]) -> Point2,
{
    let mut out = [0.0; NDOF];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let (n, t) = (f.normal[i], f.tangent[i]);
        let (mut m0, mut m1, mut mt) = (0.0, 0.0, 0.0);
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            let mut l = [0.0; 3];
            l[j] = 1.0 - s;
            l[k] = *s;
            let v = field(l);
            let vn = v.dot(n);
            m0 += w * vn;
            m1 += w * vn * (2.0 * s - 1.0);
            mt += w * v.dot(t);
        }
        let sg = orient.signs[i];
        out[3 * i] = sg * m0;
        out[3 * i + 1] = 3.0 * m1;
        out[3 * i + 2] = sg * mt;
    }
    out
}

/// DOFs of a polynomial field (exact for degree <= 4 along edges).
pub fn dof_values(f: &CellFrame, orient: Orientation, v: &VectorPoly) -> [f64; NDOF] {
    dof_values_with(f, orient, edge_degree5(), |l| v.eval(l))
}

/// DOFs of a field given in Cartesian coordinates.
pub fn dof_values_of_field<F>(f: &CellFrame, orient: Orientation, rule: &EdgeRule, field: F) -> [f64; NDOF]
where
    F: Fn(Point2) -> Point2,
{
    dof_values_with(f, orient, rule, |l| field(f.point_at(l)))
}

fn invert9(d: &Mat<f64>) -> Mat<f64> {
    let lu = d.partial_piv_lu();
    lu.inverse()
}

/// Nodal basis of sBDFM on one cell, dual to the DOFs in `orient`.
pub fn nodal_basis(f: &CellFrame, orient: Orientation) -> [VectorPoly; NDOF] {
    let span = p2minus_spanning_set(f);
    let mut d = Mat::<f64>::zeros(NDOF, NDOF);
    for (c, v) in span.iter().enumerate() {
        let dv = dof_values(f, orient, v);
        for r in 0..NDOF {
            d[(r, c)] = dv[r];
        }
    }
    let inv = invert9(&d);
    let mut out = [VectorPoly::zero(); NDOF];
    for (a, o) in out.iter_mut().enumerate() {
        for (c, v) in span.iter().enumerate() {
            let coef = inv[(c, a)];
            if coef != 0.0 {
                *o += v.scale(coef);
            }
        }
    }
    out
}

/// Closed-form nodal functions `(phi_{n,0}, phi_{n,1}, phi_{t,0})` of edge
/// `i`, normalized with the first moment `int v.n (l_j - l_k)` and the
/// counterclockwise local frame.
pub fn closed_form_nodal(f: &CellFrame, i: usize) -> [VectorPoly; 3] {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    let n = f.normal[i];
    let q = |a: usize| lam(a) * (lam(a) * 3.0 - ScalarPoly::constant(2.0));
    let tk = f.tangent[k] * (1.0 / n.dot(f.tangent[k]));
    let tj = f.tangent[j] * (1.0 / n.dot(f.tangent[j]));
    let bubble = lam(j) * lam(k) * 6.0;
    let n0 = VectorPoly::times_vector(q(j), tk)
        + VectorPoly::times_vector(q(k), tj)
        + VectorPoly::times_vector(bubble, n);
    let n1 = (VectorPoly::times_vector(q(j), tk) - VectorPoly::times_vector(q(k), tj)).scale(3.0);
    let t0 = VectorPoly::times_vector(bubble, f.tangent[i]);
    [n0, n1, t0]
}

/// Values, gradients and divergences of the nodal basis at the points of a
/// triangle rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub weights: Vec<f64>,
    pub points: Vec<Point2>,
    /// `values[q][a]`.
    pub values: Vec<[Point2; NDOF]>,
    /// `grads[q][a] = [grad v_x, grad v_y]`.
    pub grads: Vec<[[Point2; 2]; NDOF]>,
    pub divs: Vec<[f64; NDOF]>,
}

pub fn tabulate(f: &CellFrame, basis: &[VectorPoly; NDOF], rule: &TriangleRule) -> Tabulation {
    let grads: Vec<[[ScalarPoly; 2]; 2]> = basis.iter().map(|v| v.grad(f)).collect();
    let nq = rule.points.len();
    let mut tab = Tabulation {
        weights: rule.weights.iter().map(|w| w * f.area).collect(),
        points: rule.points.iter().map(|&l| f.point_at(l)).collect(),
        values: Vec::with_capacity(nq),
        grads: Vec::with_capacity(nq),
        divs: Vec::with_capacity(nq),
    };
    for &l in &rule.points {
        let mv = crate::poly::monomial_values(l);
        let mut vals = [Point2::default(); NDOF];
        let mut grs = [[Point2::default(); 2]; NDOF];
        let mut dv = [0.0; NDOF];
        for a in 0..NDOF {
            vals[a] = Point2::new(basis[a].x.dot_values(&mv), basis[a].y.dot_values(&mv));
            let g = &grads[a];
            grs[a] = [
                Point2::new(g[0][0].dot_values(&mv), g[0][1].dot_values(&mv)),
                Point2::new(g[1][0].dot_values(&mv), g[1][1].dot_values(&mv)),
            ];
            dv[a] = grs[a][0].x + grs[a][1].y;
        }
        tab.values.push(vals);
        tab.grads.push(grs);
        tab.divs.push(dv);
    }
    tab
}

/// Integral of a scalar integrand over a cell.
pub fn integrate_cell<F: Fn(Point2) -> f64>(f: &CellFrame, rule: &TriangleRule, g: F) -> f64 {
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&l, w)| w * g(f.point_at(l)))
        .sum::<f64>()
        * f.area
}

/// Integral of a scalar integrand over the segment `a`-`b`.
pub fn integrate_edge<F: Fn(Point2) -> f64>(a: Point2, b: Point2, rule: &EdgeRule, g: F) -> f64 {
    let len = (b - a).norm();
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&s, w)| w * g(a * (1.0 - s) + b * s))
        .sum::<f64>()
        * len
}

//! Polynomials of degree <= 3 in the barycentric coordinates of one cell.
//!
//! Coefficients live on the monomials `l1^a l2^b l3^c`, `a + b + c <= 3`.
//! The representation is not unique (`l1 + l2 + l3 = 1`), which is harmless
//! for evaluation and differentiation.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::geometry::{signed_area, Point2};

pub const NMON: usize = 20;

pub const MONOMIALS: [[u8; 3]; NMON] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [0, 2, 0],
    [0, 0, 2],
    [1, 1, 0],
    [0, 1, 1],
    [1, 0, 1],
    [3, 0, 0],
    [0, 3, 0],
    [0, 0, 3],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [0, 2, 1],
    [1, 0, 2],
    [0, 1, 2],
    [1, 1, 1],
];

const LOOKUP: [[[u8; 4]; 4]; 4] = {
    let mut t = [[[u8::MAX; 4]; 4]; 4];
    let mut k = 0;
    while k < NMON {
        let m = MONOMIALS[k];
        t[m[0] as usize][m[1] as usize][m[2] as usize] = k as u8;
        k += 1;
    }
    t
};

fn index_of(a: usize, b: usize, c: usize) -> Option<usize> {
    if a + b + c > 3 {
        return None;
    }
    Some(LOOKUP[a][b][c] as usize)
}

/// Values of all monomials at barycentric point `l`.
pub fn monomial_values(l: [f64; 3]) -> [f64; NMON] {
    let p = |i: usize| [1.0, l[i], l[i] * l[i], l[i] * l[i] * l[i]];
    let (p0, p1, p2) = (p(0), p(1), p(2));
    let mut out = [0.0; NMON];
    for (k, m) in MONOMIALS.iter().enumerate() {
        out[k] = p0[m[0] as usize] * p1[m[1] as usize] * p2[m[2] as usize];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPoly {
    pub coef: [f64; NMON],
}

impl Default for ScalarPoly {
    fn default() -> Self {
        Self::zero()
    }
}

impl ScalarPoly {
    pub const fn zero() -> Self {
        ScalarPoly { coef: [0.0; NMON] }
    }

    pub fn constant(v: f64) -> Self {
        let mut p = Self::zero();
        p.coef[0] = v;
        p
    }

    /// The barycentric coordinate `l_i`.
    pub fn lambda(i: usize) -> Self {
        let mut e = [0usize; 3];
        e[i] = 1;
        Self::monomial(e, 1.0)
    }

    pub fn monomial(e: [usize; 3], c: f64) -> Self {
        let mut p = Self::zero();
        p.coef[index_of(e[0], e[1], e[2]).expect("degree above 3")] = c;
        p
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.coef.iter_mut().for_each(|c| *c *= s);
        self
    }

    pub fn degree(&self) -> Option<usize> {
        MONOMIALS
            .iter()
            .zip(self.coef.iter())
            .filter(|(_, &c)| c != 0.0)
            .map(|(m, _)| (m[0] + m[1] + m[2]) as usize)
            .max()
    }

    pub fn eval(&self, l: [f64; 3]) -> f64 {
        self.dot_values(&monomial_values(l))
    }

    pub fn dot_values(&self, mv: &[f64; NMON]) -> f64 {
        self.coef.iter().zip(mv.iter()).map(|(c, v)| c * v).sum()
    }

    /// Product; `None` if the degree would exceed 3.
    pub fn checked_mul(&self, o: &ScalarPoly) -> Option<ScalarPoly> {
        let mut out = ScalarPoly::zero();
        for (i, a) in MONOMIALS.iter().enumerate() {
            if self.coef[i] == 0.0 {
                continue;
            }
            for (j, b) in MONOMIALS.iter().enumerate() {
                if o.coef[j] == 0.0 {
                    continue;
                }
                let k = index_of(
                    (a[0] + b[0]) as usize,
                    (a[1] + b[1]) as usize,
                    (a[2] + b[2]) as usize,
                )?;
                out.coef[k] += self.coef[i] * o.coef[j];
            }
        }
        Some(out)
    }

    /// Partial derivative with respect to `l_i`, the coordinates treated as
    /// independent variables.
    pub fn d(&self, i: usize) -> ScalarPoly {
        let mut out = ScalarPoly::zero();
        for (k, m) in MONOMIALS.iter().enumerate() {
            let c = self.coef[k];
            if c == 0.0 || m[i] == 0 {
                continue;
            }
            let mut e = [m[0] as usize, m[1] as usize, m[2] as usize];
            e[i] -= 1;
            out.coef[index_of(e[0], e[1], e[2]).unwrap()] += c * m[i] as f64;
        }
        out
    }

    /// Cartesian gradient on the cell with the given frame.
    pub fn grad(&self, f: &CellFrame) -> [ScalarPoly; 2] {
        let d = [self.d(0), self.d(1), self.d(2)];
        let mut gx = ScalarPoly::zero();
        let mut gy = ScalarPoly::zero();
        for i in 0..3 {
            gx += d[i].scale(f.grad_lambda[i].x);
            gy += d[i].scale(f.grad_lambda[i].y);
        }
        [gx, gy]
    }

    /// `curl q = (dq/dy, -dq/dx)`.
    pub fn curl(&self, f: &CellFrame) -> VectorPoly {
        let [gx, gy] = self.grad(f);
        VectorPoly { x: gy, y: -gx }
    }

    pub fn hessian(&self, f: &CellFrame) -> [[ScalarPoly; 2]; 2] {
        let [gx, gy] = self.grad(f);
        [gx.grad(f), gy.grad(f)]
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.coef.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for ScalarPoly {
    type Output = ScalarPoly;
    fn add(mut self, o: ScalarPoly) -> ScalarPoly {
        self += o;
        self
    }
}

impl AddAssign for ScalarPoly {
    fn add_assign(&mut self, o: ScalarPoly) {
        for (a, b) in self.coef.iter_mut().zip(o.coef.iter()) {
            *a += b;
        }
    }
}

impl Sub for ScalarPoly {
    type Output = ScalarPoly;
    fn sub(self, o: ScalarPoly) -> ScalarPoly {
        self + (-o)
    }
}

impl Neg for ScalarPoly {
    type Output = ScalarPoly;
    fn neg(self) -> ScalarPoly {
        self.scale(-1.0)
    }
}

impl Mul for ScalarPoly {
    type Output = ScalarPoly;
    fn mul(self, o: ScalarPoly) -> ScalarPoly {
        self.checked_mul(&o).expect("polynomial degree above 3")
    }
}

impl Mul<f64> for ScalarPoly {
    type Output = ScalarPoly;
    fn mul(self, s: f64) -> ScalarPoly {
        self.scale(s)
    }
}

/// Vector polynomial with Cartesian components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VectorPoly {
    pub x: ScalarPoly,
    pub y: ScalarPoly,
}

impl VectorPoly {
    pub const fn zero() -> Self {
        VectorPoly {
            x: ScalarPoly::zero(),
            y: ScalarPoly::zero(),
        }
    }

    /// `p * (vx, vy)` for a constant vector.
    pub fn times_vector(p: ScalarPoly, v: Point2) -> Self {
        VectorPoly {
            x: p.scale(v.x),
            y: p.scale(v.y),
        }
    }

    pub fn scale(self, s: f64) -> Self {
        VectorPoly {
            x: self.x.scale(s),
            y: self.y.scale(s),
        }
    }

    pub fn eval(&self, l: [f64; 3]) -> Point2 {
        let mv = monomial_values(l);
        Point2::new(self.x.dot_values(&mv), self.y.dot_values(&mv))
    }

    pub fn div(&self, f: &CellFrame) -> ScalarPoly {
        self.x.grad(f)[0] + self.y.grad(f)[1]
    }

    /// `rot v = dv_y/dx - dv_x/dy`.
    pub fn rot(&self, f: &CellFrame) -> ScalarPoly {
        self.y.grad(f)[0] - self.x.grad(f)[1]
    }

    /// Row `c` holds the gradient of component `c`.
    pub fn grad(&self, f: &CellFrame) -> [[ScalarPoly; 2]; 2] {
        [self.x.grad(f), self.y.grad(f)]
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.x.max_abs_coef().max(self.y.max_abs_coef())
    }
}

impl Add for VectorPoly {
    type Output = VectorPoly;
    fn add(self, o: VectorPoly) -> VectorPoly {
        VectorPoly {
            x: self.x + o.x,
            y: self.y + o.y,
        }
    }
}

impl AddAssign for VectorPoly {
    fn add_assign(&mut self, o: VectorPoly) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for VectorPoly {
    type Output = VectorPoly;
    fn sub(self, o: VectorPoly) -> VectorPoly {
        self + o.scale(-1.0)
    }
}

impl Neg for VectorPoly {
    type Output = VectorPoly;
    fn neg(self) -> VectorPoly {
        self.scale(-1.0)
    }
}

impl Mul<f64> for VectorPoly {
    type Output = VectorPoly;
    fn mul(self, s: f64) -> VectorPoly {
        self.scale(s)
    }
}

/// Geometry of one cell. Local edge `i` runs counterclockwise from vertex
/// `i+1` to vertex `i+2` (mod 3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellFrame {
    pub points: [Point2; 3],
    pub area: f64,
    pub grad_lambda: [Point2; 3],
    pub edge_len: [f64; 3],
    /// Unit outward normals.
    pub normal: [Point2; 3],
    /// Unit counterclockwise tangents, `normal x tangent > 0`.
    pub tangent: [Point2; 3],
}

impl CellFrame {
    /// `points` must be counterclockwise.
    pub fn new(points: [Point2; 3]) -> Self {
        let area = signed_area(points[0], points[1], points[2]);
        let mut grad_lambda = [Point2::default(); 3];
        let mut edge_len = [0.0; 3];
        let mut normal = [Point2::default(); 3];
        let mut tangent = [Point2::default(); 3];
        for i in 0..3 {
            let d = points[(i + 2) % 3] - points[(i + 1) % 3];
            let len = d.norm();
            edge_len[i] = len;
            tangent[i] = d * (1.0 / len);
            normal[i] = tangent[i].rot_cw();
            // grad l_i = -n_i d_i / (2S)
            grad_lambda[i] = normal[i] * (-len / (2.0 * area));
        }
        CellFrame {
            points,
            area,
            grad_lambda,
            edge_len,
            normal,
            tangent,
        }
    }

    pub fn point_at(&self, l: [f64; 3]) -> Point2 {
        self.points[0] * l[0] + self.points[1] * l[1] + self.points[2] * l[2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> CellFrame {
        CellFrame::new([Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)])
    }

    #[test]
    fn lookup_is_a_bijection() {
        for (k, m) in MONOMIALS.iter().enumerate() {
            assert_eq!(index_of(m[0] as usize, m[1] as usize, m[2] as usize), Some(k));
        }
        assert_eq!(index_of(2, 2, 0), None);
    }

    #[test]
    fn gradients_of_lambda() {
        let f = reference();
        assert!((f.grad_lambda[0] - Point2::new(-1.0, -1.0)).norm() < 1e-15);
        assert!((f.grad_lambda[1] - Point2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((f.grad_lambda[2] - Point2::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn product_and_derivative() {
        let l = [0.2, 0.3, 0.5];
        let p = ScalarPoly::lambda(0) * ScalarPoly::lambda(1) * ScalarPoly::lambda(1);
        assert!((p.eval(l) - 0.2 * 0.09).abs() < 1e-15);
        assert!((p.d(1).eval(l) - 2.0 * 0.2 * 0.3).abs() < 1e-15);
        assert_eq!(p.degree(), Some(3));
        assert!(p.checked_mul(&ScalarPoly::lambda(2)).is_none());
    }

    #[test]
    fn curl_is_divergence_free() {
        let f = CellFrame::new([Point2::new(0.1, 0.2), Point2::new(1.3, 0.1), Point2::new(0.4, 0.9)]);
        let q = ScalarPoly::lambda(0) * ScalarPoly::lambda(1) * (ScalarPoly::lambda(2) * 3.0 - ScalarPoly::constant(1.0));
        let v = q.curl(&f);
        let d = v.div(&f);
        for l in [[0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [0.1, 0.1, 0.8]] {
            assert!(d.eval(l).abs() < 1e-13);
        }
    }
}

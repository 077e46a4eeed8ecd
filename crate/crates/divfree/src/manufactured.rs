//! Closed-form solutions on the unit square built from the quartic bubble
//! `g(s) = s^2 (1 - s)^2`.

use crate::assembly::{ScalarField, VectorField};
use crate::geometry::Point2;

fn g(s: f64) -> [f64; 5] {
    [
        s * s * (1.0 - s) * (1.0 - s),
        2.0 * s - 6.0 * s * s + 4.0 * s * s * s,
        2.0 - 12.0 * s + 12.0 * s * s,
        -12.0 + 24.0 * s,
        24.0,
    ]
}

/// `u = g(x) g(y)`, with `Delta^2 u` as load.
#[derive(Debug, Clone, Copy, Default)]
pub struct BubblePlate;

impl BubblePlate {
    pub fn load(&self, p: Point2) -> f64 {
        let (a, b) = (g(p.x), g(p.y));
        a[4] * b[0] + 2.0 * a[2] * b[2] + a[0] * b[4]
    }
}

impl ScalarField for BubblePlate {
    fn value(&self, p: Point2) -> f64 {
        g(p.x)[0] * g(p.y)[0]
    }

    fn gradient(&self, p: Point2) -> Point2 {
        let (a, b) = (g(p.x), g(p.y));
        Point2::new(a[1] * b[0], a[0] * b[1])
    }

    fn hessian(&self, p: Point2) -> [[f64; 2]; 2] {
        let (a, b) = (g(p.x), g(p.y));
        let xy = a[1] * b[1];
        [[a[2] * b[0], xy], [xy, a[0] * b[2]]]
    }
}

/// Velocity `curl(g(x) g(y)) = (g(x) g'(y), -g'(x) g(y))` and pressure
/// `x^3 + y^3 - 1/2` (mean zero on the unit square).
#[derive(Debug, Clone, Copy)]
pub struct StokesBubble {
    pub epsilon: f64,
}

impl StokesBubble {
    pub fn pressure(&self, p: Point2) -> f64 {
        p.x.powi(3) + p.y.powi(3) - 0.5
    }

    /// `-eps^2 Delta u + grad p`.
    pub fn forcing(&self, p: Point2) -> Point2 {
        let (a, b) = (g(p.x), g(p.y));
        let lap = Point2::new(a[2] * b[1] + a[0] * b[3], -(a[3] * b[0] + a[1] * b[2]));
        let e2 = self.epsilon * self.epsilon;
        Point2::new(3.0 * p.x * p.x, 3.0 * p.y * p.y) - lap * e2
    }
}

impl VectorField for StokesBubble {
    fn value(&self, p: Point2) -> Point2 {
        let (a, b) = (g(p.x), g(p.y));
        Point2::new(a[0] * b[1], -a[1] * b[0])
    }

    fn gradient(&self, p: Point2) -> [Point2; 2] {
        let (a, b) = (g(p.x), g(p.y));
        [
            Point2::new(a[1] * b[1], a[0] * b[2]),
            Point2::new(-a[2] * b[0], -a[1] * b[1]),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(Point2) -> f64>(f: F, p: Point2, d: Point2) -> f64 {
        let h = 1e-5;
        (f(p + d * h) - f(p - d * h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = StokesBubble { epsilon: 0.7 };
        let p = Point2::new(0.3, 0.55);
        let ex = Point2::new(1.0, 0.0);
        let ey = Point2::new(0.0, 1.0);
        let gr = s.gradient(p);
        assert!((fd(|q| s.value(q).x, p, ex) - gr[0].x).abs() < 1e-8);
        assert!((fd(|q| s.value(q).x, p, ey) - gr[0].y).abs() < 1e-8);
        assert!((fd(|q| s.value(q).y, p, ex) - gr[1].x).abs() < 1e-8);
        assert!((fd(|q| s.value(q).y, p, ey) - gr[1].y).abs() < 1e-8);
        assert!((gr[0].x + gr[1].y).abs() < 1e-15);
        // -eps^2 Delta u by second differences of u
        let lap = |c: fn(Point2) -> f64| {
            let h = 1e-4;
            (c(p + ex * h) + c(p - ex * h) + c(p + ey * h) + c(p - ey * h) - 4.0 * c(p)) / (h * h)
        };
        let ux = |q: Point2| StokesBubble { epsilon: 1.0 }.value(q).x;
        let f = s.forcing(p);
        assert!((f.x - (3.0 * p.x * p.x - 0.49 * lap(ux))).abs() < 1e-5);

        let b = BubblePlate;
        let h = b.hessian(p);
        assert!((fd(|q| b.gradient(q).x, p, ex) - h[0][0]).abs() < 1e-8);
        assert!((fd(|q| b.gradient(q).x, p, ey) - h[0][1]).abs() < 1e-8);
        assert!((fd(|q| b.gradient(q).y, p, ey) - h[1][1]).abs() < 1e-8);
        let lap_of = |q: Point2| {
            let hh = b.hessian(q);
            hh[0][0] + hh[1][1]
        };
        let hs = 1e-3;
        let l2 = (lap_of(p + ex * hs) + lap_of(p - ex * hs) + lap_of(p + ey * hs) + lap_of(p - ey * hs)
            - 4.0 * lap_of(p))
            / (hs * hs);
        assert!((l2 - b.load(p)).abs() < 1e-5);
    }
}

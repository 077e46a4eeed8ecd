//! Quadrature on triangles (barycentric points, weights summing to 1) and on
//! edges (parameter in [0, 1], weights summing to 1). Multiply by the
//! measure of the cell or edge.

use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// 12-point rule exact for total degree 6 (Dunavant).
pub fn triangle_degree6() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut points = Vec::with_capacity(12);
        let mut weights = Vec::with_capacity(12);
        let mut orbit3 = |a: f64, w: f64| {
            let b = 0.5 * (1.0 - a);
            for p in [[a, b, b], [b, a, b], [b, b, a]] {
                points.push(p);
                weights.push(w);
            }
        };
        orbit3(0.501_426_509_658_179, 0.116_786_275_726_379);
        orbit3(0.873_821_971_016_996, 0.050_844_906_370_207);
        let (a, b) = (0.053_145_049_844_817, 0.310_352_451_033_784);
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            points.push(p);
            weights.push(0.082_851_075_618_374);
        }
        TriangleRule {
            points,
            weights,
            degree: 6,
        }
    })
}

/// Conical (collapsed square) product of `n`-point Gauss rules, exact for
/// total degree `2n - 2`.
pub fn triangle_conical(n: usize) -> TriangleRule {
    let g = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in g.points.iter().zip(&g.weights) {
        for (v, wv) in g.points.iter().zip(&g.weights) {
            let l1 = *u;
            let l2 = v * (1.0 - u);
            points.push([1.0 - l1 - l2, l1, l2]);
            // reference triangle has area 1/2; the map has Jacobian (1 - u)
            weights.push(2.0 * wu * wv * (1.0 - u));
        }
    }
    TriangleRule {
        points,
        weights,
        degree: 2 * n - 2,
    }
}

/// Rule used for loads and error norms of non-polynomial data.
pub fn triangle_high() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(|| triangle_conical(9))
}

/// `n`-point Gauss-Legendre rule on [0, 1], exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> EdgeRule {
    assert!(n >= 1);
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton iteration from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    EdgeRule {
        points,
        weights,
        degree: 2 * n - 1,
    }
}

/// `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// 3-point Gauss rule, exact for degree 5.
pub fn edge_degree5() -> &'static EdgeRule {
    static RULE: OnceLock<EdgeRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(3))
}

/// 6-point Gauss rule, exact for degree 11.
pub fn edge_degree11() -> &'static EdgeRule {
    static RULE: OnceLock<EdgeRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(6))
}

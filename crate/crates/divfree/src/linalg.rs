//! Sparse factorizations and a Lanczos eigensolver for operators that are
//! self-adjoint in an SPD inner product.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Conj, Mat, Side};

use crate::error::{Error, Result};
use crate::sparse::{self, SpMat};

fn to_col(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn from_col(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Factorization(format!("{what} produced non-finite values")))
    }
}

/// Sparse Cholesky factor of an SPD matrix.
pub struct Cholesky {
    llt: Llt<usize, f64>,
    n: usize,
}

impl Cholesky {
    pub fn new(a: &SpMat) -> Result<Cholesky> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
        }
        let llt = a
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Factorization(format!("Cholesky: {e:?}")))?;
        Ok(Cholesky { llt, n: a.nrows() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = to_col(b);
        self.llt.solve_in_place_with_conj(Conj::No, x.as_mut());
        let x = from_col(&x);
        check_finite(&x, "Cholesky solve")?;
        Ok(x)
    }

    /// Solves for every column of `b` at once.
    pub fn solve_mat(&self, b: &Mat<f64>) -> Result<Mat<f64>> {
        let mut x = b.clone();
        self.llt.solve_in_place_with_conj(Conj::No, x.as_mut());
        if (0..x.ncols()).all(|j| (0..x.nrows()).all(|i| x[(i, j)].is_finite())) {
            Ok(x)
        } else {
            Err(Error::Factorization("Cholesky solve produced non-finite values".into()))
        }
    }
}

/// Sparse LU factor of a square matrix, kept with the matrix for
/// iterative refinement.
pub struct SparseLu {
    lu: Lu<usize, f64>,
    a: SpMat,
}

impl SparseLu {
    pub fn new(a: SpMat) -> Result<SparseLu> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
        }
        let lu = a.sp_lu().map_err(|e| Error::Factorization(format!("LU: {e:?}")))?;
        Ok(SparseLu { lu, a })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &SpMat {
        &self.a
    }

    /// One application of the factors, without refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = to_col(b);
        self.lu.solve_in_place_with_conj(Conj::No, x.as_mut());
        let x = from_col(&x);
        check_finite(&x, "LU solve (singular system?)")?;
        Ok(x)
    }

    /// Solve with up to `steps` refinement sweeps. Returns the solution and
    /// the final relative residual `|b - A x| / |b|`.
    pub fn solve_refined(&self, b: &[f64], steps: usize) -> Result<(Vec<f64>, f64)> {
        let bn = sparse::norm(b);
        if bn == 0.0 {
            return Ok((vec![0.0; b.len()], 0.0));
        }
        let mut x = self.solve(b)?;
        let mut rel = f64::INFINITY;
        for k in 0..=steps {
            let ax = sparse::matvec(&self.a, &x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let new_rel = sparse::norm(&r) / bn;
            if k > 0 && new_rel >= 0.5 * rel {
                rel = rel.min(new_rel);
                break;
            }
            rel = new_rel;
            if rel < 1e-15 || k == steps {
                break;
            }
            let dx = self.solve(&r)?;
            for (x, d) in x.iter_mut().zip(&dx) {
                *x += d;
            }
        }
        Ok((x, rel))
    }
}

/// Symmetric eigen-decomposition `M = Q D Q^T` used to whiten a dense
/// generalized problem: returns `W = Q D^{-1/2}`.
pub fn whitening(m: &Mat<f64>) -> Result<Mat<f64>> {
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("dense eigen: {e:?}")))?;
    let s = e.S().column_vector();
    let u = e.U();
    let n = m.nrows();
    for i in 0..n {
        if s[i] <= 0.0 {
            return Err(Error::Factorization("mass matrix is not positive definite".into()));
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| u[(i, j)] / s[j].sqrt()))
}

/// All eigenpairs of the dense pencil `A x = lambda M x`, ascending, with
/// `M`-orthonormal eigenvectors as columns.
pub fn dense_generalized(a: &Mat<f64>, m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let w = whitening(m)?;
    let c = w.transpose() * a * &w;
    let c = Mat::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let e = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("dense eigen: {e:?}")))?;
    let s = e.S().column_vector();
    let vals = (0..c.nrows()).map(|i| s[i]).collect();
    Ok((vals, &w * e.U()))
}

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub nwant: usize,
    /// Convergence when `beta |s_last| <= tol * |theta|`.
    pub tol: f64,
    pub max_basis: usize,
    /// Budget of operator applications.
    pub budget: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            nwant: 1,
            tol: 1e-11,
            max_basis: 400,
            budget: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub theta: f64,
    /// `M`-normalized.
    pub vector: Vec<f64>,
    pub estimate: f64,
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    /// The wanted pairs in the order chosen by the selector.
    pub pairs: Vec<RitzPair>,
    /// Every Ritz value of the final basis, ascending.
    pub ritz: Vec<f64>,
    pub applications: usize,
}

/// Lanczos with full reorthogonalization for an operator `op` self-adjoint
/// in the inner product of `m`. `select` receives the ascending Ritz values
/// and returns the indices of the wanted ones (at most `nwant`).
pub fn lanczos(
    op: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    m: &dyn Fn(&[f64]) -> Vec<f64>,
    start: &[f64],
    opts: &LanczosOptions,
    select: &dyn Fn(&[f64]) -> Vec<usize>,
) -> Result<LanczosResult> {
    let n = start.len();
    let max_basis = opts.max_basis.min(n).max(1);
    let mnorm = |v: &[f64]| sparse::dot(v, &m(v)).max(0.0).sqrt();
    let s0 = mnorm(start);
    if s0 == 0.0 || !s0.is_finite() {
        return Err(Error::InvalidParameter("Lanczos start vector has zero norm".into()));
    }
    let mut q: Vec<Vec<f64>> = vec![start.iter().map(|x| x / s0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut applications = 0;
    let mut scale: f64 = 0.0;
    loop {
        let j = q.len() - 1;
        let mut w = op(&q[j])?;
        applications += 1;
        check_finite(&w, "Lanczos operator")?;
        // two passes of classical Gram-Schmidt in the M inner product
        let mut a = 0.0;
        for pass in 0..2 {
            let mw = m(&w);
            let c: Vec<f64> = q.iter().map(|qi| sparse::dot(qi, &mw)).collect();
            if pass == 0 {
                a = c[j];
            } else {
                a += c[j];
            }
            for (qi, ci) in q.iter().zip(&c) {
                for (wk, qk) in w.iter_mut().zip(qi) {
                    *wk -= ci * qk;
                }
            }
        }
        alpha.push(a);
        let b = mnorm(&w);
        scale = scale.max(a.abs()).max(b);
        let k = alpha.len();
        let exhausted = b <= 1e-13 * scale || k == max_basis;
        let check = exhausted || k >= opts.nwant && (k.is_multiple_of(5) || k < 20) || applications >= opts.budget;
        if check {
            let t = Mat::from_fn(k, k, |r, c| {
                if r == c {
                    alpha[r]
                } else if r == c + 1 {
                    beta[c]
                } else if c == r + 1 {
                    beta[r]
                } else {
                    0.0
                }
            });
            let e = t
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::NoConvergence(format!("tridiagonal eigen: {e:?}")))?;
            let s = e.S().column_vector();
            let u = e.U();
            let ritz: Vec<f64> = (0..k).map(|i| s[i]).collect();
            let wanted = select(&ritz);
            let est = |i: usize| if exhausted && b <= 1e-13 * scale { 0.0 } else { b * u[(k - 1, i)].abs() };
            let done = wanted.len() >= opts.nwant.min(k)
                && wanted.iter().all(|&i| est(i) <= opts.tol * ritz[i].abs().max(1e-300));
            if done || exhausted || applications >= opts.budget {
                if !done && wanted.len() < opts.nwant.min(n) {
                    return Err(Error::NoConvergence(format!(
                        "Lanczos found {} of {} wanted eigenvalues after {applications} applications",
                        wanted.len(),
                        opts.nwant
                    )));
                }
                if !done {
                    let worst = wanted
                        .iter()
                        .map(|&i| est(i) / ritz[i].abs())
                        .fold(0.0f64, f64::max);
                    if !(exhausted && k == n) {
                        return Err(Error::NoConvergence(format!(
                            "Lanczos residual estimate {worst:e} after {applications} applications (basis {k})"
                        )));
                    }
                }
                let pairs = wanted
                    .iter()
                    .map(|&i| {
                        let mut v = vec![0.0; n];
                        for (r, qr) in q.iter().enumerate().take(k) {
                            let c = u[(r, i)];
                            for (vk, qk) in v.iter_mut().zip(qr) {
                                *vk += c * qk;
                            }
                        }
                        let nv = mnorm(&v);
                        for x in &mut v {
                            *x /= nv;
                        }
                        RitzPair {
                            theta: ritz[i],
                            vector: v,
                            estimate: est(i),
                        }
                    })
                    .collect();
                return Ok(LanczosResult {
                    pairs,
                    ritz,
                    applications,
                });
            }
        }
        beta.push(b);
        q.push(w.iter().map(|x| x / b).collect());
    }
}

/// Deterministic pseudo-random start vector.
pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> SpMat {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        sparse::from_triplets(n, n, &t)
    }

    #[test]
    fn cholesky_and_lu_solve() {
        let a = laplace_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x = Cholesky::new(&a).unwrap().solve(&b).unwrap();
        let r = sparse::matvec(&a, &x);
        assert!(r.iter().zip(&b).all(|(r, b)| (r - b).abs() < 1e-12));
        let (y, rel) = SparseLu::new(a).unwrap().solve_refined(&b, 3).unwrap();
        assert!(rel < 1e-14);
        assert!(x.iter().zip(&y).all(|(x, y)| (x - y).abs() < 1e-11));
    }

    #[test]
    fn lanczos_finds_extreme_laplace_eigenvalues() {
        let n = 200;
        let a = laplace_1d(n);
        let chol = Cholesky::new(&a).unwrap();
        let mut op = |x: &[f64]| chol.solve(x);
        let id = |x: &[f64]| x.to_vec();
        let opts = LanczosOptions {
            nwant: 3,
            ..Default::default()
        };
        let top = |r: &[f64]| (0..r.len()).rev().take(3).collect::<Vec<_>>();
        let res = lanczos(&mut op, &id, &random_vector(n, 7), &opts, &top).unwrap();
        for (k, p) in res.pairs.iter().enumerate() {
            let h = std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64;
            let exact = 2.0 - 2.0 * h.cos();
            assert!((1.0 / p.theta - exact).abs() < 1e-10 * exact, "{k}");
        }
    }

    #[test]
    fn dense_generalized_matches_diagonal_pencil() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let m = Mat::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.0 });
        let (v, x) = dense_generalized(&a, &m).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-14 && (v[2] - 1.5).abs() < 1e-14);
        assert!((x[(0, 0)].abs() - 0.5f64.sqrt()).abs() < 1e-14);
    }
}

//! Stokes source and eigenvalue problems, the biharmonic solve and the
//! inf-sup estimator.

use faer::Mat;

use crate::assembly::{assemble_potential_load, reduce, SparseOperator};
use crate::combination::CombinationMatrix;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::kernel::PotentialBasis;
use crate::linalg::{dense_generalized, lanczos, random_vector, Cholesky, LanczosOptions, SparseLu};
use crate::mesh::Triangulation;
use crate::sparse::{self, SpMat};

/// Problems up to this size are solved with dense eigensolvers.
pub const DENSE_LIMIT: usize = 2000;
/// Operator applications allowed per eigen solve.
pub const BUDGET: usize = 5000;
/// Pencil eigenvalues below this fraction of `lambda_max` count as null.
pub const NULL_FRACTION: f64 = 1e-9;
const REFINE_STEPS: usize = 5;
const SOLVE_TOL: f64 = 1e-9;
const LANCZOS_BASIS: usize = 400;
const SMOOTHING_STEPS: usize = 2;
const SEED: u64 = 0x5eed;
/// Upper bound of the inf-sup pencil spectrum.
pub const SPECTRAL_BOUND: f64 = 2.0;

fn check_dims(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("{what}: {got} != {want}")));
    }
    Ok(())
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    /// Mean-zero pressure coefficients.
    pub pressure: Vec<f64>,
    /// Relative residual of the augmented system after refinement.
    pub residual: f64,
    /// `max |B u|`.
    pub divergence: f64,
    /// Pressure mean `m^T p`.
    pub mean: f64,
}

/// Factorized Stokes system `[[eps^2 A, B^T], [B, 0]]`. The constant
/// pressure mode is removed by pinning pressure DOF 0 (its row of `B` is
/// implied by the others, since `(div v, 1) = 0`); solutions are shifted to
/// mean zero afterwards with `m = M_p 1`.
pub struct StokesSolver {
    lu: SparseLu,
    b: SpMat,
    mean: Vec<f64>,
    nu: usize,
    np: usize,
}

impl StokesSolver {
    pub fn new(a: &SparseOperator, b: &SparseOperator, mp: &SparseOperator, epsilon: f64) -> Result<StokesSolver> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        let (nu, np) = (a.nrows(), b.nrows());
        check_dims("velocity blocks", b.ncols(), nu)?;
        check_dims("pressure mass", mp.nrows(), np)?;
        if np == 0 {
            return Err(Error::DimensionMismatch("empty pressure space".into()));
        }
        let mean = sparse::matvec(&mp.matrix, &vec![1.0; np]);
        let e2 = epsilon * epsilon;
        let mut t: Vec<(usize, usize, f64)> = sparse::triplets(&a.matrix)
            .into_iter()
            .map(|(i, j, v)| (i, j, e2 * v))
            .collect();
        for (i, j, v) in sparse::triplets(&b.matrix) {
            if i != 0 {
                t.push((nu + i, j, v));
                t.push((j, nu + i, v));
            }
        }
        t.push((nu, nu, 1.0));
        let k = sparse::from_triplets(nu + np, nu + np, &t);
        Ok(StokesSolver {
            lu: SparseLu::new(k)?,
            b: b.matrix.clone(),
            mean,
            nu,
            np,
        })
    }

    fn zero_mean(&self, p: &mut [f64]) {
        let c = sparse::dot(&self.mean, p) / self.mean.iter().sum::<f64>();
        for x in p {
            *x -= c;
        }
    }

    /// Solves `eps^2 A u - B^T p = f`, `B u = 0`, `m^T p = 0`.
    pub fn solve(&self, load: &[f64]) -> Result<SaddleSolution> {
        check_dims("load", load.len(), self.nu)?;
        let (velocity, mut pressure, residual) = self.solve_refined(load)?;
        for p in &mut pressure {
            *p = -*p;
        }
        self.zero_mean(&mut pressure);
        let divergence = sparse::max_abs_vec(&sparse::matvec(&self.b, &velocity));
        let mean = sparse::dot(&self.mean, &pressure);
        Ok(SaddleSolution {
            velocity,
            pressure,
            residual,
            divergence,
            mean,
        })
    }

    fn solve_refined(&self, g: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let mut rhs = g.to_vec();
        rhs.resize(self.nu + self.np, 0.0);
        let (x, residual) = self.lu.solve_refined(&rhs, REFINE_STEPS)?;
        if residual > SOLVE_TOL {
            return Err(Error::Residual(residual));
        }
        Ok((x[..self.nu].to_vec(), x[self.nu..].to_vec(), residual))
    }

    /// Velocity part of the solution with load `g`, without refinement.
    fn velocity_of(&self, g: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = g.to_vec();
        rhs.resize(self.nu + self.np, 0.0);
        let mut x = self.lu.solve(&rhs)?;
        x.truncate(self.nu);
        Ok(x)
    }
}

pub fn solve_stokes(
    a: &SparseOperator,
    b: &SparseOperator,
    mp: &SparseOperator,
    load: &[f64],
    epsilon: f64,
) -> Result<SaddleSolution> {
    StokesSolver::new(a, b, mp, epsilon)?.solve(load)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Dense,
    ShiftInvert,
    Saddle,
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `|eps^2 A x - lambda M x| / |x|` in the coordinates of `vectors`.
    pub residuals: Vec<f64>,
    pub method: EigenMethod,
    pub applications: usize,
}

fn dense(a: &SpMat) -> Mat<f64> {
    sparse::to_dense(a)
}

fn column(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Inverse iteration steps on a Ritz vector: damps the high-frequency
/// error components that the stiffness matrix would amplify.
fn smooth(
    x: &mut Vec<f64>,
    m: &dyn Fn(&[f64]) -> Vec<f64>,
    solve: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<()> {
    for _ in 0..SMOOTHING_STEPS {
        let mut y = solve(&m(x))?;
        let n = sparse::dot(&y, &m(&y)).sqrt();
        for v in &mut y {
            *v /= n;
        }
        *x = y;
    }
    Ok(())
}

/// Rayleigh quotient `x^T A x / x^T M x`.
fn quotient(a: &SpMat, m: &SpMat, x: &[f64]) -> f64 {
    sparse::dot(x, &sparse::matvec(a, x)) / sparse::dot(x, &sparse::matvec(m, x))
}

/// Smallest `k` eigenpairs of `eps^2 K^T A K x = lambda K^T M K x`.
pub fn stokes_eigs(
    a: &SparseOperator,
    m: &SparseOperator,
    kernel: &CombinationMatrix,
    k: usize,
    epsilon: f64,
) -> Result<EigenResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let ak = reduce(a, kernel)?.matrix;
    let mk = reduce(m, kernel)?.matrix;
    let n = ak.nrows();
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds the kernel dimension {n}")));
    }
    let e2 = epsilon * epsilon;
    let (values, vectors, method, applications) = if n <= DENSE_LIMIT {
        let (vals, x) = dense_generalized(&dense(&ak), &dense(&mk))?;
        let values: Vec<f64> = vals[..k].iter().map(|v| e2 * v).collect();
        let vectors = (0..k).map(|j| column(&x, j)).collect();
        (values, vectors, EigenMethod::Dense, 0)
    } else {
        let chol = Cholesky::new(&ak)?;
        let mut op = |x: &[f64]| chol.solve(&sparse::matvec(&mk, x));
        let mm = |x: &[f64]| sparse::matvec(&mk, x);
        let opts = LanczosOptions {
            nwant: k,
            tol: 1e-12,
            max_basis: LANCZOS_BASIS,
            budget: BUDGET,
        };
        let top = |r: &[f64]| (0..r.len()).rev().take(k).collect::<Vec<_>>();
        let res = lanczos(&mut op, &mm, &random_vector(n, SEED), &opts, &top)?;
        let mut vectors: Vec<Vec<f64>> = res.pairs.into_iter().map(|p| p.vector).collect();
        for x in &mut vectors {
            smooth(x, &mm, &mut |g| chol.solve(g))?;
        }
        let values = vectors.iter().map(|x| e2 * quotient(&ak, &mk, x)).collect();
        (values, vectors, EigenMethod::ShiftInvert, res.applications)
    };
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&l, x): (&f64, &Vec<f64>)| {
            let mut r = sparse::matvec(&ak, x);
            for v in &mut r {
                *v *= e2;
            }
            axpy(&mut r, -l, &sparse::matvec(&mk, x));
            sparse::norm(&r) / sparse::norm(x)
        })
        .collect();
    Ok(EigenResult {
        values,
        vectors,
        residuals,
        method,
        applications,
    })
}

/// Smallest `k` Stokes eigenvalues from the saddle-point form: Lanczos on
/// the velocity solution operator of `[[eps^2 A, B^T], [B, 0]]`, whose range
/// is the discrete kernel.
pub fn stokes_eigs_saddle(
    a: &SparseOperator,
    m: &SparseOperator,
    b: &SparseOperator,
    mp: &SparseOperator,
    k: usize,
    epsilon: f64,
) -> Result<EigenResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let solver = StokesSolver::new(a, b, mp, epsilon)?;
    let n = a.nrows();
    let mm = |x: &[f64]| sparse::matvec(&m.matrix, x);
    let mut op = |x: &[f64]| solver.velocity_of(&mm(x));
    let start = op(&random_vector(n, SEED))?;
    let opts = LanczosOptions {
        nwant: k,
        tol: 1e-12,
        max_basis: LANCZOS_BASIS,
        budget: BUDGET,
    };
    let top = |r: &[f64]| {
        let smax = r.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        (0..r.len()).rev().filter(|&i| r[i] > 1e-10 * smax).take(k).collect::<Vec<_>>()
    };
    let res = lanczos(&mut op, &mm, &start, &opts, &top)?;
    let mut vectors: Vec<Vec<f64>> = res.pairs.into_iter().map(|p| p.vector).collect();
    for x in &mut vectors {
        smooth(x, &mm, &mut |g| Ok(solver.solve_refined(g)?.0))?;
    }
    let ea = sparse::scaled(&a.matrix, epsilon * epsilon);
    let values: Vec<f64> = vectors.iter().map(|x| quotient(&ea, &m.matrix, x)).collect();
    let mut residuals = Vec::with_capacity(k);
    for (l, x) in values.iter().zip(&vectors) {
        // x is an eigenvector iff solving with load lambda M x returns x
        let g: Vec<f64> = mm(x).iter().map(|v| l * v).collect();
        let (y, _, _) = solver.solve_refined(&g)?;
        let r = sparse::matvec(&ea, &sub(x, &y));
        residuals.push(sparse::norm(&r) / sparse::norm(x));
    }
    Ok(EigenResult {
        values,
        vectors,
        residuals,
        method: EigenMethod::Saddle,
        applications: res.applications,
    })
}

#[derive(Debug, Clone)]
pub struct InfSupReport {
    /// Smallest positive eigenvalue of `B A^-1 B^T p = lambda M_p p`.
    pub lambda_min_plus: f64,
    pub lambda_max: f64,
    /// `sqrt(lambda_min_plus)`.
    pub beta: f64,
    pub sqrt_lambda_max: f64,
    /// Dimension of the pencil null space (dense path only).
    pub null_dim: Option<usize>,
    /// Null Ritz values discarded by the iterative path.
    pub discarded: usize,
    /// Shift used for the smallest positive eigenvalue (iterative path).
    pub shift: Option<f64>,
    /// `|S p - lambda M_p p| / |M_p p|` for `[lambda_min_plus, lambda_max]`.
    pub residuals: [f64; 2],
    pub method: EigenMethod,
    pub applications: usize,
}

fn pencil_residual(s: &dyn Fn(&[f64]) -> Result<Vec<f64>>, mp: &SpMat, p: &[f64], l: f64) -> Result<f64> {
    let mp_p = sparse::matvec(mp, p);
    let mut r = s(p)?;
    axpy(&mut r, -l, &mp_p);
    Ok(sparse::norm(&r) / sparse::norm(&mp_p))
}

fn rayleigh(s: &dyn Fn(&[f64]) -> Result<Vec<f64>>, mp: &SpMat, p: &[f64]) -> Result<f64> {
    Ok(sparse::dot(p, &s(p)?) / sparse::dot(p, &sparse::matvec(mp, p)))
}

/// Extreme eigenvalues of the pencil `(B A^-1 B^T, M_p)`; the null space
/// (constants and any spurious pressure modes) is excluded.
pub fn infsup_constant(a: &SparseOperator, b: &SparseOperator, mp: &SparseOperator) -> Result<InfSupReport> {
    let (nu, np) = (a.nrows(), b.nrows());
    check_dims("velocity blocks", b.ncols(), nu)?;
    check_dims("pressure mass", mp.nrows(), np)?;
    let chol = Cholesky::new(&a.matrix)?;
    let s_apply = |p: &[f64]| -> Result<Vec<f64>> {
        let v = chol.solve(&sparse::matvec_t(&b.matrix, p))?;
        Ok(sparse::matvec(&b.matrix, &v))
    };
    if np <= DENSE_LIMIT {
        return infsup_dense(&chol, b, mp, &s_apply);
    }

    let mchol = Cholesky::new(&mp.matrix)?;
    let start = mchol.solve(&sparse::matvec(&b.matrix, &random_vector(nu, SEED)))?;
    let mut applications = 0;

    // (div v)^2 <= 2 |grad v|^2 pointwise, so 2 bounds the spectrum and the
    // top eigenvalues are well separated as 2 - lambda
    let opts = LanczosOptions {
        nwant: 1,
        tol: 1e-10,
        max_basis: LANCZOS_BASIS,
        budget: BUDGET,
    };
    let most_negative = |_: &[f64]| vec![0];
    let res = pencil_shift_invert(a, b, mp, -SPECTRAL_BOUND, &start, &opts, &most_negative)?;
    applications += res.applications;
    let pmax = res.pairs[0].vector.clone();
    let lambda_max = rayleigh(&s_apply, &mp.matrix, &pmax)?;
    let null = NULL_FRACTION * lambda_max;

    let mut shift = 1e-3 * lambda_max;
    let mut last_err = None;
    for _ in 0..3 {
        let select = |r: &[f64]| {
            (0..r.len())
                .rev()
                .filter(|&i| r[i] > 0.0 && 1.0 / r[i] - shift >= null)
                .take(1)
                .collect::<Vec<_>>()
        };
        let opts = LanczosOptions {
            budget: BUDGET - applications,
            ..opts.clone()
        };
        match pencil_shift_invert(a, b, mp, shift, &start, &opts, &select) {
            Ok(res) => {
                applications += res.applications;
                let discarded = res.ritz.iter().filter(|&&t| t > 0.0 && 1.0 / t - shift < null).count();
                let pmin = &res.pairs[0].vector;
                let lambda_min_plus = rayleigh(&s_apply, &mp.matrix, pmin)?;
                let residuals = [
                    pencil_residual(&s_apply, &mp.matrix, pmin, lambda_min_plus)?,
                    pencil_residual(&s_apply, &mp.matrix, &pmax, lambda_max)?,
                ];
                return Ok(InfSupReport {
                    lambda_min_plus,
                    lambda_max,
                    beta: lambda_min_plus.sqrt(),
                    sqrt_lambda_max: lambda_max.sqrt(),
                    null_dim: None,
                    discarded,
                    shift: Some(shift),
                    residuals,
                    method: EigenMethod::ShiftInvert,
                    applications,
                });
            }
            Err(e @ Error::NoConvergence(_)) => {
                last_err = Some(e);
                shift *= 0.1;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoConvergence("inf-sup estimate".into())))
}

/// Lanczos on `(S + delta M_p)^-1 M_p`, applied through the LU factors of
/// `[[A, B^T], [B, -delta M_p]]`. Ritz values are `1 / (lambda + delta)`.
fn pencil_shift_invert(
    a: &SparseOperator,
    b: &SparseOperator,
    mp: &SparseOperator,
    delta: f64,
    start: &[f64],
    opts: &LanczosOptions,
    select: &dyn Fn(&[f64]) -> Vec<usize>,
) -> Result<crate::linalg::LanczosResult> {
    let (nu, np) = (a.nrows(), b.nrows());
    let bt = sparse::transpose(&b.matrix);
    let dm = sparse::scaled(&mp.matrix, -delta);
    let k = sparse::blocks(nu + np, nu + np, &[(0, 0, &a.matrix), (0, nu, &bt), (nu, 0, &b.matrix), (nu, nu, &dm)]);
    let lu = SparseLu::new(k)?;
    let mm = |x: &[f64]| sparse::matvec(&mp.matrix, x);
    let mut op = |r: &[f64]| -> Result<Vec<f64>> {
        let mut rhs = vec![0.0; nu];
        rhs.extend(mm(r).iter().map(|v| -v));
        let x = lu.solve(&rhs)?;
        Ok(x[nu..].to_vec())
    };
    lanczos(&mut op, &mm, start, opts, select)
}

fn infsup_dense(
    chol: &Cholesky,
    b: &SparseOperator,
    mp: &SparseOperator,
    s_apply: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<InfSupReport> {
    let bt = dense(&sparse::transpose(&b.matrix));
    let x = chol.solve_mat(&bt)?;
    let s = bt.transpose() * &x;
    let s = Mat::from_fn(s.nrows(), s.ncols(), |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let (vals, vecs) = dense_generalized(&s, &dense(&mp.matrix))?;
    let np = vals.len();
    let lambda_max = vals[np - 1];
    let null = NULL_FRACTION * lambda_max;
    let null_dim = vals.iter().filter(|&&v| v < null).count();
    if null_dim == np {
        return Err(Error::NoConvergence("pencil has no positive eigenvalue".into()));
    }
    let lambda_min_plus = vals[null_dim];
    let pmin = column(&vecs, null_dim);
    let pmax = column(&vecs, np - 1);
    let residuals = [
        pencil_residual(s_apply, &mp.matrix, &pmin, lambda_min_plus)?,
        pencil_residual(s_apply, &mp.matrix, &pmax, lambda_max)?,
    ];
    Ok(InfSupReport {
        lambda_min_plus,
        lambda_max,
        beta: lambda_min_plus.sqrt(),
        sqrt_lambda_max: lambda_max.sqrt(),
        null_dim: Some(null_dim),
        discarded: 0,
        shift: None,
        residuals,
        method: EigenMethod::Dense,
        applications: 0,
    })
}

#[derive(Debug, Clone)]
pub struct BiharmonicSolution {
    /// Coefficients of the potential basis (equivalently of the kernel basis
    /// for the curl).
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

/// Solves `K^T A K x = (g, zeta)`: the potential `sum x_k zeta_k`
/// approximates the clamped plate solution with load `g`.
pub fn solve_biharmonic(
    tri: &Triangulation,
    a: &SparseOperator,
    kernel: &CombinationMatrix,
    potentials: &PotentialBasis,
    g: &dyn Fn(Point2) -> f64,
) -> Result<BiharmonicSolution> {
    check_dims("potential basis", potentials.len(), kernel.n_cols())?;
    let ak = reduce(a, kernel)?.matrix;
    let load = assemble_potential_load(tri, potentials, g);
    let chol = Cholesky::new(&ak)?;
    let mut x = chol.solve(&load)?;
    let ln = sparse::norm(&load);
    let mut residual = 0.0;
    if ln > 0.0 {
        for _ in 0..2 {
            let r = sub(&load, &sparse::matvec(&ak, &x));
            residual = sparse::norm(&r) / ln;
            if residual < 1e-14 {
                break;
            }
            axpy(&mut x, 1.0, &chol.solve(&r)?);
        }
        residual = sparse::norm(&sub(&load, &sparse::matvec(&ak, &x))) / ln;
    }
    if residual > SOLVE_TOL {
        return Err(Error::Residual(residual));
    }
    Ok(BiharmonicSolution {
        coefficients: x,
        residual,
    })
}

//! Thin helpers over faer's compressed-column matrices.

use std::io::Write;

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

pub type SpMat = SparseColMat<usize, f64>;

/// Builds a matrix from `(row, col, value)` entries; duplicates are summed.
pub fn from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> SpMat {
    let t: Vec<Triplet<usize, usize, f64>> = entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    SpMat::try_new_from_triplets(nrows, ncols, &t).expect("triplet indices in range")
}

pub fn zeros(nrows: usize, ncols: usize) -> SpMat {
    from_triplets(nrows, ncols, &[])
}

pub fn identity(n: usize) -> SpMat {
    let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
    from_triplets(n, n, &t)
}

pub fn diagonal(d: &[f64]) -> SpMat {
    let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
    from_triplets(d.len(), d.len(), &t)
}

/// Stored entries in column-major order.
pub fn triplets(a: &SpMat) -> Vec<(usize, usize, f64)> {
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let val = a.val();
    let mut out = Vec::with_capacity(val.len());
    for j in 0..a.ncols() {
        for k in cp[j]..cp[j + 1] {
            out.push((ri[k], j, val[k]));
        }
    }
    out
}

/// Entries of column `j` as `(row, value)`.
pub fn column(a: &SpMat, j: usize) -> Vec<(usize, f64)> {
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let val = a.val();
    (cp[j]..cp[j + 1]).map(|k| (ri[k], val[k])).collect()
}

pub fn matvec(a: &SpMat, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let val = a.val();
    let mut y = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for k in cp[j]..cp[j + 1] {
            y[ri[k]] += val[k] * xj;
        }
    }
    y
}

/// `a^T x`.
pub fn matvec_t(a: &SpMat, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len());
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let val = a.val();
    (0..a.ncols())
        .map(|j| (cp[j]..cp[j + 1]).map(|k| val[k] * x[ri[k]]).sum())
        .collect()
}

pub fn transpose(a: &SpMat) -> SpMat {
    let t: Vec<_> = triplets(a).into_iter().map(|(i, j, v)| (j, i, v)).collect();
    from_triplets(a.ncols(), a.nrows(), &t)
}

pub fn product(a: &SpMat, b: &SpMat) -> Result<SpMat> {
    if a.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "product of {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a * b)
}

/// `c^T a d`.
pub fn congruence(c: &SpMat, a: &SpMat, d: &SpMat) -> Result<SpMat> {
    if c.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "C has {} rows, operator has {}",
            c.nrows(),
            a.nrows()
        )));
    }
    let ad = product(a, d)?;
    product(&transpose(c), &ad)
}

pub fn scaled(a: &SpMat, s: f64) -> SpMat {
    let t: Vec<_> = triplets(a).into_iter().map(|(i, j, v)| (i, j, s * v)).collect();
    from_triplets(a.nrows(), a.ncols(), &t)
}

pub fn to_dense(a: &SpMat) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(a.nrows(), a.ncols());
    for (i, j, v) in triplets(a) {
        m[(i, j)] += v;
    }
    m
}

pub fn max_abs(a: &SpMat) -> f64 {
    a.val().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `max |a - a^T| / max |a|`.
pub fn symmetry_defect(a: &SpMat) -> f64 {
    let scale = max_abs(a);
    if scale == 0.0 {
        return 0.0;
    }
    let t = transpose(a);
    let mut e = triplets(a);
    e.extend(triplets(&t).into_iter().map(|(i, j, v)| (i, j, -v)));
    max_abs(&from_triplets(a.nrows(), a.ncols(), &e)) / scale
}

/// Assembles a block matrix from `(row offset, col offset, block)` parts.
pub fn blocks(nrows: usize, ncols: usize, parts: &[(usize, usize, &SpMat)]) -> SpMat {
    let mut t = Vec::new();
    for &(r0, c0, b) in parts {
        t.extend(triplets(b).into_iter().map(|(i, j, v)| (i + r0, j + c0, v)));
    }
    from_triplets(nrows, ncols, &t)
}

/// Writes `row col value` lines, 0-based, preceded by a size header.
pub fn write_coo(a: &SpMat, mut w: impl Write) -> Result<()> {
    writeln!(w, "# {} {} {}", a.nrows(), a.ncols(), a.val().len())?;
    for (i, j, v) in triplets(a) {
        writeln!(w, "{i} {j} {v:e}")?;
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs_vec(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance attached to every eigenvalue we report.
pub const EIG_TOL: f64 = 1e-10;

pub fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part of `a` with a unit eigenvector.
pub fn min_sym_eigen(a: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = symmetric_part(a).symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    (val, eig.eigenvectors.column(idx).into_owned())
}

pub fn max_sym_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetric_part(a)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Maximum absolute row sum.
pub fn infinity_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn determinant(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    a.clone().lu().determinant()
}

pub fn principal_submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])])
}

pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let lu = a.clone().lu();
    if !lu.is_invertible() {
        return Err(Error::Numerical("singular linear system".into()));
    }
    let x = lu
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular linear system".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("ill-conditioned linear system".into()));
    }
    Ok(x)
}

pub fn solve_vec(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let m = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    Ok(solve(a, &m)?.column(0).into_owned())
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    solve(a, &DMatrix::identity(a.nrows(), a.ncols()))
}

/// Numerical rank from singular values, relative threshold `rtol`.
pub fn rank(a: &DMatrix<f64>, rtol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * smax).count()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (1e-12 * smax).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).map_err(|e| Error::Numerical(e.to_string()))
}

/// `G ⊗ I_n`.
pub fn kron_identity(g: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let big = g.nrows() * n;
    let mut w = DMatrix::zeros(big, g.ncols() * n);
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let v = g[(i, j)];
            if v != 0.0 {
                for k in 0..n {
                    w[(i * n + k, j * n + k)] = v;
                }
            }
        }
    }
    w
}

pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Largest real part over the (complex) spectrum of a square matrix.
pub fn max_real_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Radical-inverse (van der Corput) value of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut out = 0.0;
    let mut f = inv;
    while index > 0 {
        out += (index % base) as f64 * f;
        index /= base;
        f *= inv;
    }
    out
}

const PRIMES: [u64; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Deterministic low-discrepancy point in `[0,1]^dim`; `offset` shifts the
/// start of the sequence. Dimensions beyond the prime table reuse bases with
/// a coordinate-dependent shift.
pub fn halton_point(index: u64, dim: usize, offset: u64) -> Vec<f64> {
    (0..dim)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()];
            let k = index + 1 + offset + (d / PRIMES.len()) as u64 * 7919;
            radical_inverse(k, base)
        })
        .collect()
}

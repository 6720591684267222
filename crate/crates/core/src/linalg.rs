//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};

/// Ratio of smallest to largest singular value; 0 for an all-zero matrix.
///
/// Matrices with more columns than rows have a zero smallest singular value
/// as far as column rank is concerned, so they report 0.
pub fn sigma_ratio(a: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 {
        return 1.0;
    }
    if a.nrows() < a.ncols() {
        return 0.0;
    }
    let sv = a.singular_values();
    let max = sv.max();
    if max <= 0.0 || !max.is_finite() {
        return 0.0;
    }
    sv.min() / max
}

pub fn has_full_column_rank(a: &DMatrix<f64>, tol: f64) -> bool {
    sigma_ratio(a) > tol
}

/// 2-norm condition number of a square matrix.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        sv.max() / min
    }
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.max();
    let eps = max * f64::EPSILON * (a.nrows().max(a.ncols()) as f64);
    svd.solve(b, eps)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Residual norm scaled by `max(‖b‖, 1)`.
pub fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let r = if a.ncols() == 0 { b.clone() } else { a * x - b };
    r.norm() / b.norm().max(1.0)
}

/// Spectral radius of an elementwise nonnegative square matrix.
///
/// The Perron root is itself an eigenvalue, so shifting by the identity
/// moves it to `rho + 1` while every other eigenvalue stays inside that
/// modulus. The shift also breaks the cyclic symmetry of permutation-like
/// matrices on which the unshifted Schur iteration stalls.
pub fn perron_radius(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    debug_assert!(a.iter().all(|&v| v >= 0.0));
    let shifted = a + DMatrix::identity(n, n);
    match shifted.clone().try_schur(f64::EPSILON, 10_000) {
        Some(schur) => {
            let top = schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
            (top - 1.0).max(0.0)
        }
        None => collatz_wielandt(&shifted) - 1.0,
    }
}

/// Power iteration with Collatz-Wielandt bounds for a nonnegative matrix
/// with positive diagonal.
fn collatz_wielandt(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut x = DVector::from_element(n, 1.0);
    let mut upper = f64::INFINITY;
    for _ in 0..100_000 {
        let y = a * &x;
        let ratios = y.iter().zip(x.iter()).map(|(a, b)| a / b);
        let (lo, hi) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        upper = hi;
        if hi - lo <= 1e-13 * hi {
            break;
        }
        x = &y / y.max();
    }
    upper
}

/// Copy the listed columns of `a` into a new matrix.
pub fn select_columns(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])])
}

/// Advance `idx` to the next `k`-combination of `0..n` in lexicographic order.
/// Returns false once the last combination has been passed.
pub fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Binomial coefficient as f64 (only used for sizing and reporting).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

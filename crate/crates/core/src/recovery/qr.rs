use nalgebra::{DMatrix, DVector};

use crate::error::{param, Error, Result};
use crate::linalg;

/// Orthogonal split of the known-nonzero block `A2 = [Q1 Q2] [R1; 0]`.
#[derive(Debug, Clone)]
pub struct QrSplit {
    /// `m x n2`, spans the range of `A2`.
    pub q_thin: DMatrix<f64>,
    /// `m x (m - n2)`, orthonormal complement; `Q2^T A2 = 0`.
    pub q_null: DMatrix<f64>,
    /// `n2 x n2` upper triangular.
    pub r1: DMatrix<f64>,
}

/// Full Householder QR: returns orthogonal `Q` (`m x m`) and `R` (`m x n`).
///
/// Zero columns leave the reflector out, so an all-zero `A` gives `Q = I`.
pub(crate) fn householder(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(m, m);
    for j in 0..n.min(m.saturating_sub(1)) {
        let x = r.view((j, j), (m - j, 1)).clone_owned();
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        v /= vnorm;
        // R[j.., :] -= 2 v (v^T R[j.., :])
        let mut block = r.view_mut((j, 0), (m - j, n));
        let proj = v.transpose() * &block;
        block -= &v * proj * 2.0;
        // Q[:, j..] -= 2 (Q[:, j..] v) v^T
        let mut qb = q.view_mut((0, j), (m, m - j));
        let qv = &qb * &v;
        qb -= qv * v.transpose() * 2.0;
        for i in j + 1..m {
            r[(i, j)] = 0.0;
        }
    }
    (q, r)
}

/// QR split of `A2`; fails when `A2` is not of full column rank.
pub fn qr_split(a2: &DMatrix<f64>, rank_tol: f64) -> Result<QrSplit> {
    let (m, n2) = a2.shape();
    if n2 == 0 || m <= n2 {
        return param(format!("qr_split needs m > n2 >= 1, got {m}x{n2}"));
    }
    let ratio = linalg::sigma_ratio(a2);
    if !(ratio > rank_tol) {
        return Err(Error::RankDeficient { ratio });
    }
    Ok(split_unchecked(a2))
}

pub(crate) fn split_unchecked(a2: &DMatrix<f64>) -> QrSplit {
    let (m, n2) = a2.shape();
    let n2 = n2.min(m);
    let (q, r) = householder(a2);
    QrSplit {
        q_thin: q.columns(0, n2).into_owned(),
        q_null: q.columns(n2, m - n2).into_owned(),
        r1: r.view((0, 0), (n2, a2.ncols())).into_owned(),
    }
}

/// `x2 = R1^-1 Q1^T (b - A1 x1)` by back-substitution.
pub fn solve_x2(
    split: &QrSplit,
    a1: &DMatrix<f64>,
    b: &DVector<f64>,
    x1: &DVector<f64>,
) -> DVector<f64> {
    let rhs = split.q_thin.transpose() * (b - a1 * x1);
    let n = split.r1.ncols();
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc -= split.r1[(i, j)] * x[j];
        }
        x[i] = acc / split.r1[(i, i)];
    }
    x
}

use nalgebra::{DMatrix, DVector};

use super::certificate::check_uniqueness;
use super::qr::{qr_split, solve_x2, split_unchecked};
use super::{AmbiguityReport, Candidate, Method, RecoveryResult, Tolerances};
use crate::error::{param, Error, Result};
use crate::experiment::RowSystem;
use crate::linalg;

/// Sparsest solution found by exhaustive support enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct L0Solution {
    pub x: DVector<f64>,
    pub support: Vec<usize>,
    pub residual: f64,
}

/// Least-squares fit restricted to `support`, returned as a full-length vector.
fn fit_support(a: &DMatrix<f64>, b: &DVector<f64>, support: &[usize]) -> (DVector<f64>, f64) {
    let sub = linalg::select_columns(a, support);
    let coef = linalg::lstsq(&sub, b);
    let mut x = DVector::zeros(a.ncols());
    for (c, &j) in support.iter().enumerate() {
        x[j] = coef[c];
    }
    let residual = linalg::relative_residual(&sub, &coef, b);
    (x, residual)
}

/// Minimum-cardinality solution of `a x = b` with at most `k` nonzeros.
///
/// Supports are enumerated by increasing size (starting from the empty
/// support). Two accepted supports of the minimal size whose solutions differ
/// give [`Error::Ambiguous`].
pub fn solve_l0(a: &DMatrix<f64>, b: &DVector<f64>, k: usize, tol: &Tolerances) -> Result<L0Solution> {
    if k == 0 {
        return param("sparsity level k must be at least 1");
    }
    if a.nrows() != b.len() {
        return param(format!("A has {} rows but b has {}", a.nrows(), b.len()));
    }
    let n = a.ncols();
    for card in 0..=k.min(n) {
        let mut found: Option<L0Solution> = None;
        let mut idx: Vec<usize> = (0..card).collect();
        loop {
            let (x, residual) = fit_support(a, b, &idx);
            if residual < tol.residual {
                let sol = L0Solution { x, support: idx.clone(), residual };
                match &found {
                    None => found = Some(sol),
                    Some(first) => {
                        let gap = (&first.x - &sol.x).amax();
                        if gap > tol.ambiguity {
                            return Err(Error::Ambiguous(Box::new(AmbiguityReport {
                                row: None,
                                cardinality: card,
                                candidates: [
                                    Candidate::from_solution(first, None),
                                    Candidate::from_solution(&sol, None),
                                ],
                            })));
                        }
                    }
                }
            }
            if card == 0 || !linalg::next_combination(&mut idx, n) {
                break;
            }
        }
        if let Some(sol) = found {
            return Ok(sol);
        }
    }
    Err(Error::InfeasibleAtSparsity { k })
}

/// Solve one row with the known-nonzero `P(i,i)` eliminated first:
/// QR-split `A2`, find the sparsest `x1` on the projected system, then
/// recover `x2` by back-substitution.
pub fn solve_row_prior(sys: &RowSystem, k: usize, tol: &Tolerances) -> Result<RecoveryResult> {
    let certificate = check_uniqueness(&sys.a1, &sys.a2, k, tol.rank);
    let split = qr_split(&sys.a2, tol.rank)?;
    let a1_red = split.q_null.transpose() * &sys.a1;
    let b_red = split.q_null.transpose() * &sys.b;
    let l0 = solve_l0(&a1_red, &b_red, k, tol).map_err(|e| match e {
        Error::Ambiguous(mut report) => {
            report.row = Some(sys.row);
            for cand in report.candidates.iter_mut() {
                let x1 = DVector::from_vec(cand.x1.clone());
                cand.x2 = Some(solve_x2(&split, &sys.a1, &sys.b, &x1)[0]);
                cand.support = cand.support.iter().map(|&c| sys.col_map[c]).collect();
            }
            Error::Ambiguous(report)
        }
        other => other,
    })?;
    let x2 = solve_x2(&split, &sys.a1, &sys.b, &l0.x);
    let residual = full_residual(sys, &l0.x, &x2);
    Ok(RecoveryResult {
        row: sys.row,
        x1: l0.x.iter().copied().collect(),
        x2: x2.iter().copied().collect(),
        support: l0.support.iter().map(|&c| sys.col_map[c]).collect(),
        col_map: sys.col_map.clone(),
        residual,
        method: Method::L0Exhaustive,
        certificate,
    })
}

pub(crate) fn full_residual(sys: &RowSystem, x1: &DVector<f64>, x2: &DVector<f64>) -> f64 {
    let r = &sys.a1 * x1 + &sys.a2 * x2 - &sys.b;
    r.norm() / sys.b.norm().max(1.0)
}

/// Two distinct sparse solutions built from a rank-deficient column subset.
#[derive(Debug, Clone)]
pub struct ContradictionPair {
    pub b: DVector<f64>,
    pub first: (DVector<f64>, DVector<f64>),
    pub second: (DVector<f64>, DVector<f64>),
}

/// Turn a deficient subset of `Q2^T A1` into two feasible solutions.
///
/// A null vector `z` of the subset is split into two halves of at most
/// `ceil(|subset|/2)` entries; `x1 = z_a` defines the right-hand side and
/// `x1' = -z_b` solves the same projected system, with `x2'` recovered by
/// back-substitution.
pub fn contradiction_pair(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    subset: &[usize],
    x2: &DVector<f64>,
) -> Result<ContradictionPair> {
    if subset.is_empty() || subset.iter().any(|&c| c >= a1.ncols()) {
        return param("subset must name columns of A1");
    }
    if x2.len() != a2.ncols() {
        return param("x2 length must match the columns of A2");
    }
    let split = split_unchecked(a2);
    let sub = linalg::select_columns(&(split.q_null.transpose() * a1), subset);
    let s = subset.len();
    // Pad to at least s rows so the SVD yields a full right basis.
    let rows = sub.nrows().max(s);
    let mut padded = DMatrix::zeros(rows, s);
    padded.view_mut((0, 0), (sub.nrows(), s)).copy_from(&sub);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (argmin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let z = v_t.row(argmin).transpose();

    let half = s.div_ceil(2);
    let mut x1a = DVector::zeros(a1.ncols());
    let mut x1b = DVector::zeros(a1.ncols());
    for (t, &c) in subset.iter().enumerate() {
        if t < half {
            x1a[c] = z[t];
        } else {
            x1b[c] = -z[t];
        }
    }
    let b = a1 * &x1a + a2 * x2;
    let x2b = solve_x2(&split, a1, &b, &x1b);
    Ok(ContradictionPair { b, first: (x1a, x2.clone()), second: (x1b, x2b) })
}

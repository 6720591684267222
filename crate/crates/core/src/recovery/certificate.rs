use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::qr::split_unchecked;
use crate::linalg;

/// Outcome of the three-part uniqueness test for `[A1 A2] [x1; x2] = b`
/// with `x1` `k`-sparse and `x2` fully nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// `m >= 2k + n2`.
    pub m_ok: bool,
    pub a2_full_rank: bool,
    /// Every tested column subset of `Q2^T A1` has full column rank.
    pub all_subsets_ok: bool,
    /// First deficient subset in lexicographic order (columns of `A1`).
    pub deficient_subset: Option<Vec<usize>>,
    pub checked_subsets: u64,
    /// Size of the tested subsets: `min(2k, n1)`.
    pub subset_size: usize,
}

impl UniquenessReport {
    pub fn unique(&self) -> bool {
        self.m_ok && self.a2_full_rank && self.all_subsets_ok
    }
}

/// Check the uniqueness conditions for a `k`-sparse `x1`.
///
/// Subsets are scanned in lexicographic order and the scan stops at the
/// first deficient one.
pub fn check_uniqueness(a1: &DMatrix<f64>, a2: &DMatrix<f64>, k: usize, rank_tol: f64) -> UniquenessReport {
    let m = a1.nrows();
    let n1 = a1.ncols();
    let n2 = a2.ncols();
    let m_ok = m >= 2 * k + n2;
    let a2_full_rank = m > 0 && linalg::has_full_column_rank(a2, rank_tol);
    let split = split_unchecked(a2);
    let projected = split.q_null.transpose() * a1;
    let size = (2 * k).min(n1);
    let scan = scan_subsets(&projected, size, rank_tol);
    UniquenessReport {
        m_ok,
        a2_full_rank,
        all_subsets_ok: scan.witness.is_none(),
        deficient_subset: scan.witness,
        checked_subsets: scan.checked,
        subset_size: size,
    }
}

struct Scan {
    witness: Option<Vec<usize>>,
    checked: u64,
}

/// Depth-first lexicographic scan of all `size`-column subsets of `a`,
/// orthogonalising incrementally so shared prefixes are factored once.
fn scan_subsets(a: &DMatrix<f64>, size: usize, tol: f64) -> Scan {
    let (rows, n) = a.shape();
    if size == 0 {
        return Scan { witness: None, checked: 0 };
    }
    if rows < size {
        return Scan { witness: Some((0..size).collect()), checked: 1 };
    }
    let mut s = SubsetScanner {
        data: a.as_slice(),
        rows,
        n,
        size,
        tol,
        basis: vec![0.0; rows * size],
        r: vec![0.0; size * size],
        max_norm: vec![0.0; size + 1],
        chosen: Vec::with_capacity(size),
        checked: 0,
    };
    let witness = s.descend(0, 0);
    Scan { witness, checked: s.checked }
}

struct SubsetScanner<'a> {
    data: &'a [f64],
    rows: usize,
    n: usize,
    size: usize,
    tol: f64,
    /// Orthonormal basis of the current prefix, column-major `rows x size`.
    basis: Vec<f64>,
    /// Upper-triangular factor of the current prefix, row-major `size x size`.
    r: Vec<f64>,
    /// `max_norm[d]`: largest column norm among the first `d` chosen columns.
    max_norm: Vec<f64>,
    chosen: Vec<usize>,
    checked: u64,
}

impl SubsetScanner<'_> {
    fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    fn descend(&mut self, depth: usize, start: usize) -> Option<Vec<usize>> {
        let rows = self.rows;
        let last = self.n - (self.size - depth);
        for c in start..=last {
            let col = self.column(c).to_vec();
            let col_norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let max_norm = self.max_norm[depth].max(col_norm);
            // Two passes of Gram-Schmidt against the prefix basis.
            let mut w = col;
            for t in 0..depth {
                self.r[t * self.size + depth] = 0.0;
            }
            for _ in 0..2 {
                for t in 0..depth {
                    let q = &self.basis[t * rows..(t + 1) * rows];
                    let h: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= h * qi;
                    }
                    self.r[t * self.size + depth] += h;
                }
            }
            let nrm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            self.r[depth * self.size + depth] = nrm;

            // sigma_min <= |r_dd| and sigma_max >= any column norm, so this
            // prefix and every extension of it is deficient.
            if max_norm == 0.0 || nrm <= self.tol * max_norm {
                self.checked += 1;
                let mut witness = self.chosen.clone();
                witness.extend(c..c + (self.size - depth));
                return Some(witness);
            }
            if depth + 1 == self.size {
                self.checked += 1;
                if !self.leaf_full_rank() {
                    let mut witness = self.chosen.clone();
                    witness.push(c);
                    return Some(witness);
                }
                continue;
            }
            for (dst, v) in self.basis[depth * rows..(depth + 1) * rows].iter_mut().zip(&w) {
                *dst = v / nrm;
            }
            self.max_norm[depth + 1] = max_norm;
            self.chosen.push(c);
            let found = self.descend(depth + 1, c + 1);
            self.chosen.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }

    /// Exact `sigma_min / sigma_max > tol` test on the triangular factor, with
    /// Frobenius-norm bounds deciding the clear cases.
    fn leaf_full_rank(&self) -> bool {
        let s = self.size;
        let r = DMatrix::from_fn(s, s, |i, j| if j >= i { self.r[i * s + j] } else { 0.0 });
        let mut inv = DMatrix::<f64>::zeros(s, s);
        for col in 0..s {
            for i in (0..s).rev() {
                let mut acc = if i == col { 1.0 } else { 0.0 };
                for j in i + 1..s {
                    acc -= r[(i, j)] * inv[(j, col)];
                }
                inv[(i, col)] = acc / r[(i, i)];
            }
        }
        let kappa = r.norm() * inv.norm();
        if kappa.is_finite() {
            if 1.0 / kappa > self.tol {
                return true;
            }
            if (s as f64) / kappa <= self.tol {
                return false;
            }
        }
        linalg::sigma_ratio(&r) > self.tol
    }
}

//! Dense two-phase simplex for the small equality-form programs that basis
//! pursuit produces, plus the `l1` reformulation itself.

use nalgebra::{DMatrix, DVector};

use super::Tolerances;
use crate::error::{param, Error, Result};
use crate::linalg;

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;

/// Optimal point of `min c^T z  s.t.  A z = b, z >= 0`.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub z: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    /// `(m + 1) x (cols + 1)`, row-major; the last row holds reduced costs,
    /// the last column the right-hand side.
    t: Vec<f64>,
    width: usize,
    rows: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.t[row * w + col];
        for j in 0..w {
            self.t[row * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.t[row * w..(row + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == row {
                continue;
            }
            let f = self.t[i * w + col];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * pivot_row[j];
                }
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule iterations over columns `0..allowed`.
    fn optimise(&mut self, allowed: usize, iterations: &mut usize, limit: usize) -> Result<()> {
        let cost_row = self.rows;
        loop {
            let entering = (0..allowed).find(|&j| self.at(cost_row, j) < -COST_EPS);
            let Some(col) = entering else { return Ok(()) };
            let mut best: Option<(f64, usize)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((ratio, i)),
                        Some((r, bi)) => {
                            if ratio < r - 1e-14 || (ratio <= r + 1e-14 && self.basis[i] < self.basis[bi]) {
                                Some((ratio, i))
                            } else {
                                Some((r, bi))
                            }
                        }
                    }
                }
            }
            let Some((_, row)) = best else {
                return Err(Error::Parameter("linear program is unbounded".into()));
            };
            self.pivot(row, col);
            *iterations += 1;
            if *iterations > limit {
                return Err(Error::Solver { iterations: *iterations });
            }
        }
    }
}

/// Solve `min c^T z  s.t.  A z = b, z >= 0` with a two-phase tableau simplex.
pub fn simplex(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<LpSolution> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != n {
        return param("simplex: inconsistent dimensions");
    }
    let width = n + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i * width + j] = sign * a[(i, j)];
        }
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = sign * b[i];
    }
    // Phase one: minimise the sum of artificials.
    for j in 0..n {
        t[m * width + j] = -(0..m).map(|i| t[i * width + j]).sum::<f64>();
    }
    t[m * width + width - 1] = -(0..m).map(|i| t[i * width + width - 1]).sum::<f64>();
    let mut tab = Tableau { t, width, rows: m, basis: (n..n + m).collect() };

    let limit = 50 * (n + m) + 1000;
    let mut iterations = 0;
    tab.optimise(n, &mut iterations, limit)?;
    let infeasibility = -tab.at(m, width - 1);
    let scale = b.amax().max(1.0);
    if infeasibility > 1e-9 * scale {
        return Err(Error::Infeasible { residual: infeasibility / scale });
    }
    // Drive remaining artificials out of the basis; rows where that is
    // impossible are redundant and dropped.
    let mut keep = vec![true; m];
    for i in 0..m {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| tab.at(i, j).abs() > 1e-9) {
                Some(j) => tab.pivot(i, j),
                None => keep[i] = false,
            }
        }
    }
    if keep.iter().any(|k| !k) {
        let rows: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
        let mut t2 = Vec::with_capacity((rows.len() + 1) * width);
        for &i in &rows {
            t2.extend_from_slice(&tab.t[i * width..(i + 1) * width]);
        }
        t2.extend(std::iter::repeat_n(0.0, width));
        let basis = rows.iter().map(|&i| tab.basis[i]).collect();
        tab = Tableau { t: t2, width, rows: rows.len(), basis };
    }
    // Phase two reduced costs: c_j - c_B^T B^-1 A_j.
    let rows = tab.rows;
    for j in 0..width {
        let cj = if j < n { c[j] } else { 0.0 };
        let mut v = if j == width - 1 { 0.0 } else { cj };
        for i in 0..rows {
            let bi = tab.basis[i];
            let cb = if bi < n { c[bi] } else { 0.0 };
            v -= cb * tab.at(i, j);
        }
        tab.t[rows * width + j] = v;
    }
    tab.optimise(n, &mut iterations, limit)?;

    let mut z = DVector::zeros(n);
    for i in 0..rows {
        if tab.basis[i] < n {
            z[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let objective = c.dot(&z);
    Ok(LpSolution { z, objective, iterations })
}

/// `min ||x||_1  s.t.  A x = b`.
pub fn basis_pursuit(a: &DMatrix<f64>, b: &DVector<f64>, tol: &Tolerances) -> Result<DVector<f64>> {
    basis_pursuit_weighted(a, b, &vec![1.0; a.ncols()], tol)
}

/// `min sum_j w_j |x_j|  s.t.  A x = b`; a zero weight leaves `x_j` free.
///
/// Uses the split `x = u - v`, `u, v >= 0`. The LP vertex is re-fitted by
/// least squares on its support, then entries below
/// `support * max(1, ||x||_inf)` are set to zero.
pub fn basis_pursuit_weighted(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    weights: &[f64],
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if b.len() != m || weights.len() != n {
        return param("basis pursuit: inconsistent dimensions");
    }
    let ls = linalg::lstsq(a, b);
    let residual = linalg::relative_residual(a, &ls, b);
    if !(residual < tol.residual) {
        return Err(Error::Infeasible { residual });
    }
    let mut split = DMatrix::zeros(m, 2 * n);
    split.columns_mut(0, n).copy_from(a);
    split.columns_mut(n, n).copy_from(&(-a));
    let cost = DVector::from_iterator(2 * n, weights.iter().chain(weights.iter()).copied());
    let lp = simplex(&split, b, &cost)?;
    let mut x = lp.z.rows(0, n) - lp.z.rows(n, n);

    let support: Vec<usize> = (0..n).filter(|&j| x[j] != 0.0).collect();
    if !support.is_empty() && support.len() <= m {
        let sub = linalg::select_columns(a, &support);
        let coef = linalg::lstsq(&sub, b);
        let same_signs = support.iter().zip(coef.iter()).all(|(&j, &v)| v * x[j] > 0.0);
        if same_signs && linalg::relative_residual(&sub, &coef, b) < linalg::relative_residual(a, &x, b).max(1e-12) {
            x.fill(0.0);
            for (&j, &v) in support.iter().zip(coef.iter()) {
                x[j] = v;
            }
        }
    }
    let cutoff = tol.support * x.amax().max(1.0);
    x.apply(|v| {
        if v.abs() < cutoff {
            *v = 0.0
        }
    });
    Ok(x)
}

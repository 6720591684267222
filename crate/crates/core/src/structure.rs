//! Structure that survives a change of resolution: for single-input data,
//! the network seen only through its perturbed states, the particular
//! solution in which unperturbed states have no outgoing edges, and the
//! zero/nonzero constraints this places on the true `Q`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg;

/// Gains below this magnitude are treated as structural zeros.
pub const ZERO_THRESHOLD: f64 = 1e-9;
const MAX_CONDITION: f64 = 1e12;

/// Split of the states into those driven by an input and the rest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub perturbed: Vec<usize>,
    pub unperturbed: Vec<usize>,
}

impl Partition {
    /// Partition of `0..p` with the given perturbed states (in order).
    pub fn new(p: usize, perturbed: Vec<usize>) -> Result<Self> {
        if perturbed.is_empty() {
            return param("at least one state must be perturbed");
        }
        let mut seen = vec![false; p];
        for &i in &perturbed {
            if i >= p {
                return param(format!("perturbed state {i} out of range for p={p}"));
            }
            if std::mem::replace(&mut seen[i], true) {
                return param(format!("perturbed state {i} listed twice"));
            }
        }
        let unperturbed = (0..p).filter(|&i| !seen[i]).collect();
        Ok(Partition { perturbed, unperturbed })
    }

    pub fn p(&self) -> usize {
        self.perturbed.len() + self.unperturbed.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entry {
    Zero,
    Nonzero,
    Unknown,
}

impl Entry {
    fn symbol(self) -> char {
        match self {
            Entry::Zero => '0',
            Entry::Nonzero => 'x',
            Entry::Unknown => '?',
        }
    }
}

/// Ternary structure matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructurePattern {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub entries: Vec<Entry>,
}

impl StructurePattern {
    pub fn filled(rows: usize, cols: usize, value: Entry) -> Self {
        StructurePattern { rows, cols, entries: vec![value; rows * cols] }
    }

    /// Zero where `|m(i,j)| <= threshold`, nonzero elsewhere.
    pub fn from_matrix(m: &DMatrix<f64>, threshold: f64) -> Self {
        let (rows, cols) = m.shape();
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(if m[(i, j)].abs() > threshold { Entry::Nonzero } else { Entry::Zero });
            }
        }
        StructurePattern { rows, cols, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> Entry {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Entry) {
        self.entries[i * self.cols + j] = e;
    }

    /// Positions holding `e`, row-major.
    pub fn positions(&self, e: Entry) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j) == e)
            .collect()
    }

    /// Character grid, one row per line, entries separated by spaces.
    pub fn to_grid(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let line: Vec<String> = (0..self.cols).map(|j| self.get(i, j).symbol().to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_grid(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let row: Vec<Entry> = line
                .split_whitespace()
                .map(|tok| match tok {
                    "0" => Ok(Entry::Zero),
                    "x" | "X" => Ok(Entry::Nonzero),
                    "?" => Ok(Entry::Unknown),
                    other => Err(Error::Parameter(format!("bad pattern symbol {other:?}"))),
                })
                .collect::<Result<_>>()?;
            if *cols.get_or_insert(row.len()) != row.len() {
                return param("ragged pattern grid");
            }
            entries.extend(row);
            rows += 1;
        }
        Ok(StructurePattern { rows, cols: cols.unwrap_or(0), entries })
    }
}

impl fmt::Display for StructurePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_grid())
    }
}

fn block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `(I - Q22)^-1`, guarded against near-singularity.
fn unperturbed_resolvent(q0: &DMatrix<f64>, part: &Partition) -> Result<DMatrix<f64>> {
    let u = &part.unperturbed;
    let n = u.len();
    let lhs = DMatrix::identity(n, n) - block(q0, u, u);
    if n == 0 {
        return Ok(lhs);
    }
    let condition = linalg::condition_number(&lhs);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::ResolutionSingular { condition });
    }
    lhs.try_inverse().ok_or(Error::ResolutionSingular { condition: f64::INFINITY })
}

fn check_dims(q0: &DMatrix<f64>, part: &Partition) -> Result<()> {
    if q0.nrows() != q0.ncols() || q0.nrows() != part.p() {
        return param(format!(
            "Q0 is {}x{} but the partition covers {} states",
            q0.nrows(),
            q0.ncols(),
            part.p()
        ));
    }
    Ok(())
}

/// Hollow network over the perturbed states only: `(Q^11, P^11)`.
pub fn m_dsf(q0: &DMatrix<f64>, p0: &DMatrix<f64>, part: &Partition) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_dims(q0, part)?;
    let (y1, y2) = (&part.perturbed, &part.unperturbed);
    let resolvent = unperturbed_resolvent(q0, part)?;
    let mut q_bar = block(q0, y1, y1);
    if !y2.is_empty() {
        q_bar += block(q0, y1, y2) * resolvent * block(q0, y2, y1);
    }
    let n = y1.len();
    let mut scale = DMatrix::zeros(n, n);
    for i in 0..n {
        let d = 1.0 - q_bar[(i, i)];
        if d.abs() < 1.0 / MAX_CONDITION {
            return Err(Error::ResolutionSingular { condition: 1.0 / d.abs() });
        }
        scale[(i, i)] = 1.0 / d;
    }
    let mut hollow = q_bar;
    hollow.fill_diagonal(0.0);
    let q_hat = &scale * hollow;
    let p_hat = &scale * block(p0, y1, y1);
    Ok((q_hat, p_hat))
}

/// Map from perturbed to unperturbed states: `(I - Q22)^-1 Q21`.
pub fn hat_q21(q0: &DMatrix<f64>, part: &Partition) -> Result<DMatrix<f64>> {
    check_dims(q0, part)?;
    let resolvent = unperturbed_resolvent(q0, part)?;
    Ok(resolvent * block(q0, &part.unperturbed, &part.perturbed))
}

/// Particular solution in original state order: perturbed columns carry the
/// reduced network and the unperturbed rows' map; unperturbed columns are zero.
pub fn particular_solution(
    q0: &DMatrix<f64>,
    p0: &DMatrix<f64>,
    part: &Partition,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (q11, p11) = m_dsf(q0, p0, part)?;
    let q21 = hat_q21(q0, part)?;
    let p = part.p();
    let mut q_hat = DMatrix::zeros(p, p);
    let mut p_hat = DMatrix::zeros(p, p);
    for (a, &i) in part.perturbed.iter().enumerate() {
        for (b, &j) in part.perturbed.iter().enumerate() {
            q_hat[(i, j)] = q11[(a, b)];
            p_hat[(i, j)] = p11[(a, b)];
        }
    }
    for (a, &i) in part.unperturbed.iter().enumerate() {
        for (b, &j) in part.perturbed.iter().enumerate() {
            q_hat[(i, j)] = q21[(a, b)];
        }
    }
    Ok((q_hat, p_hat))
}

/// Pattern of the identifiable block `[Q^11; Q^21]`: all `p` rows, one column
/// per perturbed state (in partition order).
pub fn identifiable_pattern(q_hat: &DMatrix<f64>, part: &Partition) -> StructurePattern {
    let rows: Vec<usize> = (0..part.p()).collect();
    StructurePattern::from_matrix(&block(q_hat, &rows, &part.perturbed), ZERO_THRESHOLD)
}

/// Constraints on the true `Q` implied by the identifiable pattern.
///
/// With `Q^1 = Q_1 + Q_2 Q^21` (perturbed columns of the true `Q` plus paths
/// through unperturbed states):
/// - a zero `Q^1(i,j)` forces `Q(i,j) = 0`, and `Q(i,u) = 0` for every
///   unperturbed `u` with `Q^21(u,j)` nonzero;
/// - a nonzero `Q^1(i,j)` is `Nonzero` in `Q` when no path term
///   `Q(i,u) Q^21(u,j)` can be nonzero, and `Unknown` otherwise;
/// - the diagonal is zero and everything else is unknown.
///
/// Zero verdicts assume no exact cancellation among paths.
pub fn constraint_matrix(q1_pattern: &StructurePattern, part: &Partition) -> Result<StructurePattern> {
    let p = part.p();
    let m = part.perturbed.len();
    if q1_pattern.rows != p || q1_pattern.cols != m {
        return param(format!(
            "pattern is {}x{}, expected {p}x{m} (all rows, perturbed columns)",
            q1_pattern.rows, q1_pattern.cols
        ));
    }
    // Q^21 lives in the unperturbed rows of the identifiable block.
    let q21 = |u: usize, b: usize| q1_pattern.get(u, b);

    let mut qc = StructurePattern::filled(p, p, Entry::Unknown);
    for i in 0..p {
        qc.set(i, i, Entry::Zero);
        for (b, &j) in part.perturbed.iter().enumerate() {
            if j != i && q1_pattern.get(i, b) == Entry::Zero {
                qc.set(i, j, Entry::Zero);
                for &u in &part.unperturbed {
                    if u != i && q21(u, b) == Entry::Nonzero {
                        qc.set(i, u, Entry::Zero);
                    }
                }
            }
        }
    }
    for i in 0..p {
        for (b, &j) in part.perturbed.iter().enumerate() {
            if j == i || q1_pattern.get(i, b) != Entry::Nonzero {
                continue;
            }
            let path_possible = part
                .unperturbed
                .iter()
                .any(|&u| u != i && qc.get(i, u) != Entry::Zero && q21(u, b) != Entry::Zero);
            if !path_possible {
                qc.set(i, j, Entry::Nonzero);
            }
        }
    }
    Ok(qc)
}

//! Sparse recovery of one row of `[Q P]` with the known-nonzero `P(i,i)`
//! handled separately, plus the uniqueness certificate, exhaustive and `l1`
//! solvers, and coherence.

mod certificate;
mod coherence;
mod l0;
mod lp;
mod qr;
mod reconstruct;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use certificate::{check_uniqueness, UniquenessReport};
pub use coherence::{coherence, Coherence};
pub use l0::{contradiction_pair, solve_l0, solve_row_prior, ContradictionPair, L0Solution};
pub use lp::{basis_pursuit, basis_pursuit_weighted, simplex, LpSolution};
pub use qr::{qr_split, solve_x2, QrSplit};
pub use reconstruct::{reconstruct_network, NetworkEstimate, RowReport, RowStatus};

/// Numerical cutoffs used across recovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Minimum `sigma_min / sigma_max` for a matrix to count as full rank.
    pub rank: f64,
    /// Maximum relative residual for a support to count as a fit.
    pub residual: f64,
    /// Elementwise gap separating two genuinely different solutions.
    pub ambiguity: f64,
    /// Relative magnitude below which basis-pursuit entries are zeroed.
    pub support: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rank: 1e-8, residual: 1e-8, ambiguity: 1e-6, support: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    L0Exhaustive,
    BasisPursuit,
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l0" | "l0exhaustive" | "exhaustive" => Ok(Method::L0Exhaustive),
            "bp" | "l1" | "basispursuit" | "basis-pursuit" => Ok(Method::BasisPursuit),
            _ => Err(crate::Error::Parameter(format!("unknown method {s:?} (use l0 or bp)"))),
        }
    }
}

/// Recovered row `i`: off-diagonal `Q(i,:)` and `P(i,i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub row: usize,
    /// In the column order of `A1`; see `col_map`.
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Nonzero entries of `x1`, as state indices.
    pub support: Vec<usize>,
    pub col_map: Vec<usize>,
    /// `||[A1 A2][x1; x2] - b|| / max(||b||, 1)`.
    pub residual: f64,
    pub method: Method,
    pub certificate: UniquenessReport,
}

impl RecoveryResult {
    /// Full row of `Q` with zero diagonal.
    pub fn q_row(&self, p: usize) -> Vec<f64> {
        let mut row = vec![0.0; p];
        for (c, &j) in self.col_map.iter().enumerate() {
            row[j] = self.x1[c];
        }
        row
    }
}

/// One of two competing sparsest solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub support: Vec<usize>,
    pub x1: Vec<f64>,
    pub x2: Option<f64>,
}

impl Candidate {
    fn from_solution(sol: &L0Solution, x2: Option<f64>) -> Self {
        Candidate { support: sol.support.clone(), x1: sol.x.iter().copied().collect(), x2 }
    }
}

/// Two supports of the same minimal size both reproduce the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityReport {
    pub row: Option<usize>,
    pub cardinality: usize,
    pub candidates: [Candidate; 2],
}

impl fmt::Display for AmbiguityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(row) = self.row {
            write!(f, "row {row}: ")?;
        }
        write!(
            f,
            "supports {:?} and {:?} both fit with {} nonzeros",
            self.candidates[0].support, self.candidates[1].support, self.cardinality
        )
    }
}

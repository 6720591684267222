use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Mutual coherence of a matrix, with any all-zero columns left out.
#[derive(Debug, Clone, PartialEq)]
pub struct Coherence {
    pub mu: f64,
    pub zero_columns: Vec<usize>,
}

/// Largest normalised inner product between two distinct nonzero columns.
pub fn coherence(a: &DMatrix<f64>) -> Result<Coherence> {
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let zero_columns: Vec<usize> = (0..a.ncols()).filter(|&j| norms[j] == 0.0).collect();
    let live: Vec<usize> = (0..a.ncols()).filter(|&j| norms[j] != 0.0).collect();
    if live.len() < 2 {
        return Err(Error::UndefinedCoherence);
    }
    let gram = a.transpose() * a;
    let mut mu: f64 = 0.0;
    for (x, &i) in live.iter().enumerate() {
        for &j in &live[x + 1..] {
            mu = mu.max(gram[(i, j)].abs() / (norms[i] * norms[j]));
        }
    }
    Ok(Coherence { mu, zero_columns })
}

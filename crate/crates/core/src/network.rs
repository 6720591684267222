//! Dynamical structure functions `(Q, P)` built from first-order lags.

use std::fmt;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg;

/// Sampled steady-state gains below this magnitude are redrawn.
const MIN_GAIN: f64 = 1e-6;
const POLE_RANGE: (f64, f64) = (0.5, 2.0);
/// Target spectral radius after rescaling an ill-posed draw.
const RESCALE_TARGET: f64 = 0.9;

/// Strictly proper first-order transfer element `g / (s + a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferElement {
    #[serde(rename = "g")]
    pub gain: f64,
    #[serde(rename = "a")]
    pub pole: f64,
}

impl TransferElement {
    /// Absent edge.
    pub const ZERO: TransferElement = TransferElement { gain: 0.0, pole: 1.0 };

    pub fn new(gain: f64, pole: f64) -> Self {
        Self { gain, pole }
    }

    /// Element whose value at `s = 0` equals `steady`, with the given pole.
    pub fn with_steady_gain(steady: f64, pole: f64) -> Self {
        Self { gain: steady * pole, pole }
    }

    pub fn is_zero(&self) -> bool {
        self.gain == 0.0
    }

    pub fn steady_gain(&self) -> f64 {
        if self.gain == 0.0 {
            0.0
        } else {
            self.gain / self.pole
        }
    }
}

/// A network of `p` manifest states with hollow `Q` and diagonal `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub p: usize,
    /// Declared maximum in-degree.
    pub k: usize,
    /// `p x p`, row-major; absent edges are [`TransferElement::ZERO`].
    pub q: Vec<Vec<TransferElement>>,
    /// Diagonal of `P`.
    pub p_diag: Vec<TransferElement>,
    /// Factor applied to every `Q` gain to restore well-posedness, if any.
    pub rescale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimensions(String),
    HollowQ { i: usize },
    ZeroInput { i: usize },
    NonPositivePole { matrix: char, i: usize, j: usize },
    InDegree { row: usize, count: usize, k: usize },
    NotWellPosed { radius: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimensions(msg) => write!(f, "dimensions: {msg}"),
            Violation::HollowQ { i } => write!(f, "hollow Q at ({i},{i})"),
            Violation::ZeroInput { i } => write!(f, "P diagonal entry zero at {i}"),
            Violation::NonPositivePole { matrix, i, j } => {
                write!(f, "non-positive pole in {matrix} at ({i},{j})")
            }
            Violation::InDegree { row, count, k } => {
                write!(f, "in-degree of row {row} is {count}, expected 1..={k}")
            }
            Violation::NotWellPosed { radius } => {
                write!(f, "spectral radius of |Q(0)| is {radius:.6} (must be < 1)")
            }
        }
    }
}

impl Network {
    /// Build a network from steady-state gains, using unit poles.
    ///
    /// Entries of `q0` that are exactly zero become absent edges.
    pub fn from_steady_gains(q0: &DMatrix<f64>, p0_diag: &[f64], k: usize) -> Result<Self> {
        let p = q0.nrows();
        if q0.ncols() != p || p0_diag.len() != p {
            return param("Q0 must be square and match the P diagonal length");
        }
        let q = (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| {
                        if q0[(i, j)] == 0.0 {
                            TransferElement::ZERO
                        } else {
                            TransferElement::with_steady_gain(q0[(i, j)], 1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let p_diag = p0_diag
            .iter()
            .map(|&g| TransferElement::with_steady_gain(g, 1.0))
            .collect();
        Ok(Network { p, k, q, p_diag, rescale: None })
    }

    /// Nonzero off-diagonal positions of row `i`.
    pub fn row_support(&self, i: usize) -> Vec<usize> {
        (0..self.p).filter(|&j| j != i && !self.q[i][j].is_zero()).collect()
    }

    pub fn q0(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| self.q[i][j].steady_gain())
    }

    pub fn p0(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| {
            if i == j {
                self.p_diag[i].steady_gain()
            } else {
                0.0
            }
        })
    }

    /// Multiply every `Q` gain by `factor`.
    pub fn scale_q_gains(&mut self, factor: f64) {
        for row in &mut self.q {
            for e in row.iter_mut() {
                e.gain *= factor;
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetworkJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: NetworkJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

/// Generate a random network with per-row in-degree drawn from `1..=k`.
pub fn random_network(p: usize, k: usize, gain_bound: f64, seed: u64) -> Result<Network> {
    if p < 2 {
        return param(format!("random_network needs p >= 2, got {p}"));
    }
    if k < 1 || k >= p {
        return param(format!("random_network needs 1 <= k < p, got k={k}, p={p}"));
    }
    if !(gain_bound > 0.0) || !gain_bound.is_finite() {
        return param(format!("gain bound must be positive, got {gain_bound}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let steady = loop {
            let s: f64 = rng.random_range(-gain_bound..=gain_bound);
            if s.abs() >= MIN_GAIN {
                break s;
            }
        };
        let pole = rng.random_range(POLE_RANGE.0..=POLE_RANGE.1);
        TransferElement::with_steady_gain(steady, pole)
    };

    let mut q = vec![vec![TransferElement::ZERO; p]; p];
    for (i, row) in q.iter_mut().enumerate() {
        let degree = rng.random_range(1..=k);
        let mut cols: Vec<usize> = index::sample(&mut rng, p - 1, degree)
            .into_iter()
            .map(|j| if j >= i { j + 1 } else { j })
            .collect();
        cols.sort_unstable();
        for j in cols {
            row[j] = draw(&mut rng);
        }
    }
    let p_diag = (0..p).map(|_| draw(&mut rng)).collect();

    let mut net = Network { p, k, q, p_diag, rescale: None };
    let radius = linalg::perron_radius(&net.q0().abs());
    if radius >= 1.0 {
        let factor = RESCALE_TARGET / radius;
        net.scale_q_gains(factor);
        net.rescale = Some(factor);
    }
    Ok(net)
}

/// Directed ring `p-1 -> 0`, `i-1 -> i`, all steady-state gains 0.5.
pub fn ring_network(p: usize) -> Result<Network> {
    if p < 3 {
        return param(format!("ring_network needs p >= 3, got {p}"));
    }
    let edge = TransferElement::with_steady_gain(0.5, 1.0);
    let mut q = vec![vec![TransferElement::ZERO; p]; p];
    q[0][p - 1] = edge;
    for i in 1..p {
        q[i][i - 1] = edge;
    }
    Ok(Network {
        p,
        k: 1,
        q,
        p_diag: vec![edge; p],
        rescale: None,
    })
}

/// `Q(0)` and `P(0)`.
pub fn steady_gains(net: &Network) -> (DMatrix<f64>, DMatrix<f64>) {
    (net.q0(), net.p0())
}

/// Check every structural invariant; an empty list means the network is valid.
pub fn validate(net: &Network) -> Vec<Violation> {
    let p = net.p;
    let mut out = Vec::new();
    if net.q.len() != p || net.q.iter().any(|r| r.len() != p) || net.p_diag.len() != p {
        out.push(Violation::Dimensions(format!(
            "expected {p}x{p} Q and {p} P entries"
        )));
        return out;
    }
    for i in 0..p {
        if !net.q[i][i].is_zero() {
            out.push(Violation::HollowQ { i });
        }
        if net.p_diag[i].is_zero() {
            out.push(Violation::ZeroInput { i });
        }
        if !(net.p_diag[i].pole > 0.0) {
            out.push(Violation::NonPositivePole { matrix: 'P', i, j: i });
        }
        for j in 0..p {
            let e = &net.q[i][j];
            if !e.is_zero() && !(e.pole > 0.0) {
                out.push(Violation::NonPositivePole { matrix: 'Q', i, j });
            }
        }
        let count = net.row_support(i).len();
        if count < 1 || count > net.k {
            out.push(Violation::InDegree { row: i, count, k: net.k });
        }
    }
    let radius = linalg::perron_radius(&net.q0().abs());
    if !(radius < 1.0) {
        out.push(Violation::NotWellPosed { radius });
    }
    out
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    p: usize,
    k: usize,
    #[serde(rename = "Q")]
    q: Vec<Vec<Option<TransferElement>>>,
    #[serde(rename = "P")]
    p_diag: Vec<TransferElement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rescale: Option<f64>,
}

impl From<&Network> for NetworkJson {
    fn from(net: &Network) -> Self {
        NetworkJson {
            p: net.p,
            k: net.k,
            q: net
                .q
                .iter()
                .map(|row| row.iter().map(|e| (!e.is_zero()).then_some(*e)).collect())
                .collect(),
            p_diag: net.p_diag.clone(),
            rescale: net.rescale,
        }
    }
}

impl TryFrom<NetworkJson> for Network {
    type Error = Error;

    fn try_from(raw: NetworkJson) -> Result<Self> {
        if raw.q.len() != raw.p || raw.q.iter().any(|r| r.len() != raw.p) {
            return param(format!("Q must be {0}x{0}", raw.p));
        }
        if raw.p_diag.len() != raw.p {
            return param(format!("P must list {} diagonal entries", raw.p));
        }
        Ok(Network {
            p: raw.p,
            k: raw.k,
            q: raw
                .q
                .into_iter()
                .map(|row| row.into_iter().map(|e| e.unwrap_or(TransferElement::ZERO)).collect())
                .collect(),
            p_diag: raw.p_diag,
            rescale: raw.rescale,
        })
    }
}

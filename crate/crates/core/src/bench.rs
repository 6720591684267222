//! Seeded benchmark sweeps over random networks, emitted as CSV tables.
//!
//! Every trial draws its network from a seed derived from the bench seed and
//! the trial index, so different strategies, input counts and gain bounds see
//! the same networks.

use std::io::Write;

use serde::Serialize;

use crate::design::{run_rounds, run_until_unique, DesignState, Strategy};
use crate::error::{param, Result};
use crate::experiment::{assemble_row_system, DataSet};
use crate::network::{random_network, Network};
use crate::recovery::{basis_pursuit_weighted, coherence, Tolerances};

pub const DEFAULT_GAIN_BOUND: f64 = 0.5;
pub const DEFAULT_INPUTS: usize = 4;

/// Sizes for the `--fast` and default profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Profile {
    pub p: usize,
    pub k: usize,
    pub trials: usize,
}

impl Profile {
    pub const FULL: Profile = Profile { p: 20, k: 2, trials: 100 };
    pub const FAST: Profile = Profile { p: 10, k: 2, trials: 25 };
}

/// Outcome of one design run on one network.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub network_seed: u64,
    pub strategy: Strategy,
    pub l: usize,
    pub k: usize,
    pub p: usize,
    /// Experiments needed for every row certificate; the budget if never reached.
    pub m_required: usize,
    pub unique: bool,
    /// `(m, mean row coherence)` for each prefix of the experiment sequence.
    pub coherence_trace: Vec<(usize, f64)>,
    /// Entry `m - 1` is whether basis pursuit on the first `m` experiments
    /// recovered every row support exactly.
    pub bp_success: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessRow {
    pub strategy: Strategy,
    pub l: usize,
    pub mean_m: f64,
    pub sd_m: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceRow {
    pub gain_bound: f64,
    pub m: usize,
    pub mean_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BpRow {
    pub strategy: Strategy,
    pub m: usize,
    pub success_rate: f64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5EED, |acc, &v| splitmix(acc ^ splitmix(v)))
}

pub fn network_seed(seed: u64, trial: usize) -> u64 {
    mix(&[seed, trial as u64])
}

pub fn design_seed(seed: u64, trial: usize, strategy: Strategy, l: usize) -> u64 {
    mix(&[seed, trial as u64, strategy.id() + 1, l as u64, 0xD])
}

fn check_sizes(p: usize, k: usize, trials: usize) -> Result<()> {
    if trials == 0 {
        return param("trials must be at least 1");
    }
    if p < 2 || k == 0 || k >= p {
        return param(format!("need p >= 2 and 1 <= k < p, got p={p}, k={k}"));
    }
    Ok(())
}

/// Experiment budget for uniqueness runs.
pub fn budget(p: usize) -> usize {
    5 * p
}

/// Run one design until certification on the network of trial `trial`.
pub fn uniqueness_trial(
    p: usize,
    k: usize,
    strategy: Strategy,
    l: usize,
    seed: u64,
    trial: usize,
    tol: &Tolerances,
) -> Result<TrialRecord> {
    let network_seed = network_seed(seed, trial);
    let net = random_network(p, k, DEFAULT_GAIN_BOUND, network_seed)?;
    let out = run_until_unique(&net, strategy, l, k, budget(p), design_seed(seed, trial, strategy, l), tol)?;
    Ok(TrialRecord {
        network_seed,
        strategy,
        l,
        k,
        p,
        m_required: out.m_required,
        unique: out.unique,
        coherence_trace: Vec::new(),
        bp_success: Vec::new(),
    })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean and sample standard deviation of the experiments needed for
/// certified uniqueness, per strategy and inputs per experiment.
pub fn bench_uniqueness(
    p: usize,
    k: usize,
    trials: usize,
    strategies: &[Strategy],
    l_range: &[usize],
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<UniquenessRow>> {
    check_sizes(p, k, trials)?;
    if let Some(&l) = l_range.iter().find(|&&l| l == 0 || l > p) {
        return param(format!("inputs per experiment must be in 1..={p}, got {l}"));
    }
    let mut rows = Vec::new();
    for &strategy in strategies {
        for &l in l_range {
            let ms = (0..trials)
                .map(|t| uniqueness_trial(p, k, strategy, l, seed, t, tol).map(|r| r.m_required as f64))
                .collect::<Result<Vec<_>>>()?;
            let (mean_m, sd_m) = mean_sd(&ms);
            rows.push(UniquenessRow { strategy, l, mean_m, sd_m, trials });
        }
    }
    Ok(rows)
}

/// Mean coherence over rows of each row's full coefficient matrix `[A1 A2]`.
/// Rows whose matrix has fewer than two nonzero columns are skipped.
pub fn mean_row_coherence(data: &DataSet) -> Result<Option<f64>> {
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..data.p() {
        let sys = assemble_row_system(data, i)?;
        if let Ok(c) = coherence(&sys.full_matrix()) {
            total += c.mu;
            count += 1;
        }
    }
    Ok((count > 0).then(|| total / count as f64))
}

/// Whether basis pursuit (free `P` entry) recovers every row support of `net`.
pub fn bp_recovers(net: &Network, data: &DataSet, tol: &Tolerances) -> Result<bool> {
    for i in 0..data.p() {
        let sys = assemble_row_system(data, i)?;
        let n1 = sys.a1.ncols();
        let mut weights = vec![1.0; n1 + 1];
        weights[n1] = 0.0;
        let Ok(x) = basis_pursuit_weighted(&sys.full_matrix(), &sys.b, &weights, tol) else {
            return Ok(false);
        };
        let support: Vec<usize> = (0..n1).filter(|&c| x[c] != 0.0).map(|c| sys.col_map[c]).collect();
        if support != net.row_support(i) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn prefixes(state: &DesignState) -> impl Iterator<Item = Result<DataSet>> + '_ {
    let data = state.data.as_ref();
    (1..=state.m()).map(move |m| data.expect("rounds were run").prefix(m))
}

/// Mean row coherence for each experiment count `1..=p`, averaged over
/// trials, for each gain bound. The same network and design seeds are used
/// for every gain bound.
pub fn bench_coherence(
    p: usize,
    k: usize,
    gain_bounds: &[f64],
    trials: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<CoherenceRow>> {
    check_sizes(p, k, trials)?;
    let l = DEFAULT_INPUTS.min(p);
    let mut rows = Vec::new();
    for &gain_bound in gain_bounds {
        let mut sums = vec![0.0; p];
        let mut counts = vec![0usize; p];
        for t in 0..trials {
            let net = random_network(p, k, gain_bound, network_seed(seed, t))?;
            let state = run_rounds(&net, Strategy::Random, l, k, p, design_seed(seed, t, Strategy::Random, l), tol)?;
            for (idx, data) in prefixes(&state).enumerate() {
                if let Some(mu) = mean_row_coherence(&data?)? {
                    sums[idx] += mu;
                    counts[idx] += 1;
                }
            }
        }
        for m in 1..=p {
            let mean_mu = if counts[m - 1] > 0 { sums[m - 1] / counts[m - 1] as f64 } else { f64::NAN };
            rows.push(CoherenceRow { gain_bound, m, mean_mu });
        }
    }
    Ok(rows)
}

/// Run `p` experiments on trial `trial` and record coherence and basis
/// pursuit success for every prefix.
pub fn sensing_trial(
    p: usize,
    k: usize,
    strategy: Strategy,
    l: usize,
    seed: u64,
    trial: usize,
    tol: &Tolerances,
) -> Result<TrialRecord> {
    let network_seed = network_seed(seed, trial);
    let net = random_network(p, k, DEFAULT_GAIN_BOUND, network_seed)?;
    let state = run_rounds(&net, strategy, l, k, p, design_seed(seed, trial, strategy, l), tol)?;
    let mut coherence_trace = Vec::with_capacity(p);
    let mut bp_success = Vec::with_capacity(p);
    let mut m_required = None;
    for (idx, data) in prefixes(&state).enumerate() {
        let data = data?;
        if let Some(mu) = mean_row_coherence(&data)? {
            coherence_trace.push((idx + 1, mu));
        }
        bp_success.push(bp_recovers(&net, &data, tol)?);
        if m_required.is_none() && state.history[idx].certificates.iter().all(|&c| c) {
            m_required = Some(idx + 1);
        }
    }
    Ok(TrialRecord {
        network_seed,
        strategy,
        l,
        k,
        p,
        m_required: m_required.unwrap_or(p),
        unique: m_required.is_some(),
        coherence_trace,
        bp_success,
    })
}

/// Fraction of trials in which basis pursuit recovers the whole network, per
/// strategy and experiment count `1..=p`.
pub fn bench_bp(
    p: usize,
    k: usize,
    l: usize,
    trials: usize,
    strategies: &[Strategy],
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<BpRow>> {
    check_sizes(p, k, trials)?;
    if l == 0 || l > p {
        return param(format!("inputs per experiment must be in 1..={p}, got {l}"));
    }
    let mut rows = Vec::new();
    for &strategy in strategies {
        let mut hits = vec![0usize; p];
        for t in 0..trials {
            let rec = sensing_trial(p, k, strategy, l, seed, t, tol)?;
            for (m, ok) in rec.bp_success.iter().enumerate() {
                hits[m] += usize::from(*ok);
            }
        }
        for m in 1..=p {
            rows.push(BpRow { strategy, m, success_rate: hits[m - 1] as f64 / trials as f64 });
        }
    }
    Ok(rows)
}

/// Write rows as CSV with a header line.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

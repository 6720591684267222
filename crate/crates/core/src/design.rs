//! Sequential experiment design: pick `l` inputs per experiment until every
//! row's uniqueness certificate holds.

use std::fmt;
use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::experiment::{assemble_row_system, DataSet, ExperimentPlan};
use crate::network::Network;
use crate::recovery::{check_uniqueness, Tolerances, UniquenessReport};

const MAGNITUDE_RANGE: (f64, f64) = (0.5, 1.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Biased,
    Targeted,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::Biased, Strategy::Targeted];

    pub fn id(self) -> u64 {
        match self {
            Strategy::Random => 0,
            Strategy::Biased => 1,
            Strategy::Targeted => 2,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Random => "random",
            Strategy::Biased => "biased",
            Strategy::Targeted => "targeted",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Strategy::Random),
            "biased" | "biased-random" => Ok(Strategy::Biased),
            "targeted" => Ok(Strategy::Targeted),
            _ => param(format!("unknown strategy {s:?}")),
        }
    }
}

/// One experiment of the design loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub inputs: Vec<usize>,
    pub magnitudes: Vec<f64>,
    /// Per-row certificate after this experiment.
    pub certificates: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct DesignState {
    pub p: usize,
    pub data: Option<DataSet>,
    pub usage: Vec<usize>,
    pub k: usize,
    pub l: usize,
    pub strategy: Strategy,
    pub rng_seed: u64,
    pub history: Vec<RoundRecord>,
    /// Certificates for the data collected so far (empty before round one).
    pub reports: Vec<UniquenessReport>,
    pub tol: Tolerances,
    rng: ChaCha8Rng,
}

impl DesignState {
    pub fn new(p: usize, k: usize, l: usize, strategy: Strategy, seed: u64, tol: Tolerances) -> Result<Self> {
        if l == 0 || l > p {
            return param(format!("inputs per experiment must be in 1..={p}, got {l}"));
        }
        if k == 0 {
            return param("sparsity level k must be at least 1");
        }
        Ok(DesignState {
            p,
            data: None,
            usage: vec![0; p],
            k,
            l,
            strategy,
            rng_seed: seed,
            history: Vec::new(),
            reports: Vec::new(),
            tol,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn m(&self) -> usize {
        self.history.len()
    }

    pub fn all_unique(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(UniquenessReport::unique)
    }

    /// Choose the next input set according to the strategy.
    ///
    /// Inputs never applied so far take precedence: a row whose input is
    /// unused has a zero `A2` column and cannot be certified, and with one
    /// input per experiment a repeat only rescales an existing column. When
    /// fewer than `l` unused inputs remain they are all taken and the strategy
    /// fills the remaining slots.
    pub fn choose(&mut self) -> Result<Vec<usize>> {
        let unused: Vec<usize> = (0..self.p).filter(|&i| self.usage[i] == 0).collect();
        let (mut picks, pool) = if unused.len() >= self.l {
            (Vec::new(), unused)
        } else {
            let rest = (0..self.p).filter(|&i| self.usage[i] > 0).collect();
            (unused, rest)
        };
        let need = self.l - picks.len();
        if need > 0 {
            let mut excluded = vec![true; self.p];
            for &i in &pool {
                excluded[i] = false;
            }
            let more = match self.strategy {
                Strategy::Random => sample_uniform(&pool, need, &mut self.rng),
                Strategy::Biased => sample_biased(&pool, &self.usage, need, &mut self.rng),
                Strategy::Targeted if self.data.is_some() => {
                    let targets = self.targets();
                    targeted_pick(&targets, &self.usage, &excluded, need, &mut self.rng)
                }
                Strategy::Targeted => sample_uniform(&pool, need, &mut self.rng),
            };
            picks.extend(more);
        }
        picks.sort_unstable();
        Ok(picks)
    }

    /// Candidate input sets, one per row without a certificate: the row's own
    /// input when its `A2` column is deficient, plus the states of its
    /// deficient column subset when the experiment count is sufficient (with
    /// too few experiments every subset is deficient and says nothing).
    pub fn targets(&self) -> Vec<Vec<usize>> {
        let Some(data) = &self.data else { return Vec::new() };
        let mut out = Vec::new();
        for (i, rep) in self.reports.iter().enumerate() {
            if rep.unique() {
                continue;
            }
            let mut set = Vec::new();
            if !rep.a2_full_rank {
                set.push(i);
            }
            if rep.m_ok {
                if let Some(w) = &rep.deficient_subset {
                    let col_map: Vec<usize> = (0..data.p()).filter(|&j| j != i).collect();
                    set.extend(w.iter().map(|&c| col_map[c]));
                }
            }
            if !set.is_empty() {
                out.push(set);
            }
        }
        out
    }

    /// Run one experiment with fresh magnitudes and refresh the certificates.
    pub fn step(&mut self, net: &Network) -> Result<&RoundRecord> {
        if net.p != self.p {
            return param("network size does not match the design state");
        }
        let inputs = self.choose()?;
        let magnitudes: Vec<f64> = inputs
            .iter()
            .map(|_| self.rng.random_range(MAGNITUDE_RANGE.0..=MAGNITUDE_RANGE.1))
            .collect();
        let plan = ExperimentPlan::new(inputs.clone(), magnitudes.clone());
        match &mut self.data {
            Some(d) => d.push(net, plan)?,
            None => self.data = Some(crate::experiment::simulate(net, std::slice::from_ref(&plan))?),
        }
        for &i in &inputs {
            self.usage[i] += 1;
        }
        let data = self.data.as_ref().expect("data present after push");
        self.reports = (0..self.p)
            .map(|i| {
                let sys = assemble_row_system(data, i)?;
                Ok(check_uniqueness(&sys.a1, &sys.a2, self.k, self.tol.rank))
            })
            .collect::<Result<_>>()?;
        let certificates = self.reports.iter().map(UniquenessReport::unique).collect();
        self.history.push(RoundRecord { round: self.history.len(), inputs, magnitudes, certificates });
        Ok(self.history.last().expect("just pushed"))
    }

    /// History as JSON lines.
    pub fn write_history<W: Write>(&self, mut out: W) -> Result<()> {
        for rec in &self.history {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn sample_uniform(pool: &[usize], l: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let l = l.min(pool.len());
    index::sample(rng, pool.len(), l).into_iter().map(|i| pool[i]).collect()
}

/// Weighted sampling without replacement, weight `1 / (1 + usage)`.
fn sample_biased(pool: &[usize], usage: &[usize], l: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let l = l.min(pool.len());
    index::sample_weighted(rng, pool.len(), |i| 1.0 / (1.0 + usage[pool[i]] as f64), l)
        .expect("positive finite weights")
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

fn least_used(set: impl Iterator<Item = usize>, usage: &[usize]) -> Option<usize> {
    set.min_by_key(|&i| (usage[i], i))
}

fn targeted_pick(
    targets: &[Vec<usize>],
    usage: &[usize],
    excluded: &[bool],
    l: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(l);
    let eligible = |i: &usize| !excluded[*i];
    if let Some(first) = least_used(targets.iter().flatten().copied().filter(eligible), usage) {
        chosen.push(first);
    }
    for set in targets {
        if chosen.len() >= l {
            break;
        }
        if set.iter().any(|i| chosen.contains(i)) {
            continue;
        }
        if let Some(pick) = least_used(set.iter().copied().filter(eligible), usage) {
            chosen.push(pick);
        }
    }
    if chosen.len() < l {
        let pool: Vec<usize> = (0..usage.len()).filter(|i| eligible(i) && !chosen.contains(i)).collect();
        chosen.extend(sample_biased(&pool, usage, l - chosen.len(), rng));
    }
    chosen
}

/// Uniform `l`-subset of `0..p`.
pub fn choose_random<R: Rng + ?Sized>(p: usize, l: usize, rng: &mut R) -> Result<Vec<usize>> {
    if l == 0 || l > p {
        return param(format!("cannot choose {l} of {p} inputs"));
    }
    let mut v = index::sample(rng, p, l).into_vec();
    v.sort_unstable();
    Ok(v)
}

/// `l` inputs without replacement, weighted by `1 / (1 + usage)`.
pub fn choose_biased<R: Rng + ?Sized>(usage: &[usize], l: usize, rng: &mut R) -> Result<Vec<usize>> {
    let p = usage.len();
    if l == 0 || l > p {
        return param(format!("cannot choose {l} of {p} inputs"));
    }
    let mut v = index::sample_weighted(rng, p, |i| 1.0 / (1.0 + usage[i] as f64), l)
        .map_err(|e| Error::Parameter(e.to_string()))?
        .into_vec();
    v.sort_unstable();
    Ok(v)
}

/// Targeted choice for the current state (random on the first round).
pub fn choose_targeted(state: &mut DesignState) -> Result<Vec<usize>> {
    let saved = state.strategy;
    state.strategy = Strategy::Targeted;
    let out = state.choose();
    state.strategy = saved;
    out
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    /// Experiments performed; equals the experiment count at success.
    pub m_required: usize,
    /// False when the budget ran out first.
    pub unique: bool,
    pub state: DesignState,
}

/// Add experiments until every row is certified unique or `max_m` is reached.
pub fn run_until_unique(
    net: &Network,
    strategy: Strategy,
    l: usize,
    k: usize,
    max_m: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<DesignOutcome> {
    if max_m == 0 {
        return param("max_m must be at least 1");
    }
    let mut state = DesignState::new(net.p, k, l, strategy, seed, *tol)?;
    while state.m() < max_m {
        state.step(net)?;
        if state.all_unique() {
            return Ok(DesignOutcome { m_required: state.m(), unique: true, state });
        }
    }
    Ok(DesignOutcome { m_required: state.m(), unique: false, state })
}

/// Run exactly `rounds` experiments regardless of certificates.
pub fn run_rounds(
    net: &Network,
    strategy: Strategy,
    l: usize,
    k: usize,
    rounds: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<DesignState> {
    let mut state = DesignState::new(net.p, k, l, strategy, seed, *tol)?;
    for _ in 0..rounds {
        state.step(net)?;
    }
    Ok(state)
}

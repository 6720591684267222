//! Command-line interface.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bench::{self, Profile};
use crate::design::{run_until_unique, Strategy};
use crate::error::{param, Error, Result};
use crate::experiment::{simulate, DataSet, ExperimentPlan};
use crate::network::{random_network, ring_network, validate, Network};
use crate::recovery::{reconstruct_network, Method, Tolerances};
use crate::structure::{constraint_matrix, identifiable_pattern, particular_solution, Partition};

#[derive(Debug, Parser)]
#[command(name = "netcs", version, about = "Sparse network reconstruction from steady-state experiments")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output file or directory (stdout when omitted and the command allows it).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Rank tolerance used by the uniqueness certificate and QR split.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a ring or random network as JSON.
    Generate(GenerateArgs),
    /// Simulate steady-state experiments into Y.csv, U.csv and plans.json.
    Simulate(SimulateArgs),
    /// Reconstruct Q and P from a dataset directory.
    Reconstruct(ReconstructArgs),
    /// Identifiable structure and constraint grids for a partially perturbed network.
    InferStructure(InferArgs),
    /// Sequential experiment design; writes one JSON line per round.
    Design(DesignArgs),
    /// Experiments needed for certified uniqueness, per strategy and inputs per experiment.
    BenchUniqueness(BenchUniquenessArgs),
    /// Mean sensing-matrix coherence against experiment count, per gain bound.
    BenchCoherence(BenchCoherenceArgs),
    /// Basis pursuit success rate against experiment count, per strategy.
    BenchBp(BenchBpArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Directed ring on this many states.
    #[arg(long, conflicts_with_all = ["p", "k", "gain_bound"])]
    pub ring: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = bench::DEFAULT_GAIN_BOUND)]
    pub gain_bound: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// JSON file `{"plans": [{"inputs": [...], "magnitudes": [...]}, ...]}`.
    #[arg(long)]
    pub plans: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Directory holding Y.csv, U.csv and plans.json.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// `l0` (exhaustive) or `bp` (basis pursuit).
    #[arg(long, default_value = "l0")]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Comma-separated perturbed states (0-based).
    #[arg(long, value_delimiter = ',', required = true)]
    pub perturbed: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, default_value = "targeted")]
    pub strategy: String,
    /// Inputs per experiment.
    #[arg(long)]
    pub l: usize,
    #[arg(long)]
    pub k: usize,
    /// Experiment budget (default 5p).
    #[arg(long)]
    pub max_m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Smaller defaults (p=10, trials=25).
    #[arg(long)]
    pub fast: bool,
}

impl ProfileArgs {
    fn resolve(&self) -> Profile {
        let base = if self.fast { Profile::FAST } else { Profile::FULL };
        Profile {
            p: self.p.unwrap_or(base.p),
            k: self.k.unwrap_or(base.k),
            trials: self.trials.unwrap_or(base.trials),
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchUniquenessArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, value_delimiter = ',', default_value = "random,biased,targeted")]
    pub strategies: Vec<String>,
    /// Comma-separated inputs per experiment (default 1..=p).
    #[arg(long, value_delimiter = ',')]
    pub l: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct BenchCoherenceArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5,2.0")]
    pub gain_bounds: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct BenchBpArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, value_delimiter = ',', default_value = "random,biased,targeted")]
    pub strategies: Vec<String>,
    /// Inputs per experiment.
    #[arg(long, default_value_t = bench::DEFAULT_INPUTS)]
    pub l: usize,
}

#[derive(Serialize, Deserialize)]
struct PlansFile {
    plans: Vec<ExperimentPlan>,
}

#[derive(Serialize)]
struct StructureJson {
    perturbed: Vec<usize>,
    q_hat: Vec<Vec<f64>>,
    p_hat: Vec<Vec<f64>>,
    identifiable: String,
    constraint: String,
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances> {
    let mut t = Tolerances::default();
    if let Some(r) = tol {
        if !(r > 0.0 && r < 1.0) {
            return param(format!("--tol must lie in (0, 1), got {r}"));
        }
        t.rank = r;
    }
    Ok(t)
}

fn load_network(path: &Path) -> Result<Network> {
    let net = Network::from_json(&fs::read_to_string(path)?)?;
    if let Some(v) = validate(&net).into_iter().next() {
        return param(format!("{}: {v}", path.display()));
    }
    Ok(net)
}

fn require_out(out: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    out.clone().ok_or_else(|| Error::Parameter(format!("{what} needs --out <dir>")))
}

/// Write to the `--out` file when given, else stdout.
fn emit(out: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut f = io::BufWriter::new(fs::File::create(path)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn strategies(names: &[String]) -> Result<Vec<Strategy>> {
    names.iter().map(|s| s.parse()).collect()
}

fn rows_of(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn run(cli: Cli) -> Result<()> {
    let tol = tolerances(cli.tol)?;
    match cli.command {
        Command::Generate(a) => {
            let net = match (a.ring, a.p) {
                (Some(p), _) => ring_network(p)?,
                (None, Some(p)) => random_network(p, a.k, a.gain_bound, cli.seed)?,
                (None, None) => return param("generate needs --ring <p> or --p <p>"),
            };
            let text = net.to_json()?;
            emit(&cli.out, |w| Ok(writeln!(w, "{text}")?))
        }
        Command::Simulate(a) => {
            let dir = require_out(&cli.out, "simulate")?;
            let net = load_network(&a.network)?;
            let plans: PlansFile = serde_json::from_str(&fs::read_to_string(&a.plans)?)?;
            simulate(&net, &plans.plans)?.save(&dir)
        }
        Command::Reconstruct(a) => {
            let dir = require_out(&cli.out, "reconstruct")?;
            let method: Method = a.method.parse()?;
            let data = DataSet::load(&a.data)?;
            reconstruct_network(&data, a.k, method, &tol)?.save(&dir)
        }
        Command::InferStructure(a) => {
            let net = load_network(&a.network)?;
            let part = Partition::new(net.p, a.perturbed)?;
            let (q_hat, p_hat) = particular_solution(&net.q0(), &net.p0(), &part)?;
            let pattern = identifiable_pattern(&q_hat, &part);
            let constraint = constraint_matrix(&pattern, &part)?;
            let doc = StructureJson {
                perturbed: part.perturbed.clone(),
                q_hat: rows_of(&q_hat),
                p_hat: rows_of(&p_hat),
                identifiable: pattern.to_grid(),
                constraint: constraint.to_grid(),
            };
            match &cli.out {
                Some(_) => emit(&cli.out, |w| Ok(serde_json::to_writer_pretty(&mut *w, &doc)?)),
                None => emit(&None, |w| {
                    write!(w, "identifiable\n{}\nconstraint\n{}", doc.identifiable, doc.constraint)?;
                    Ok(())
                }),
            }
        }
        Command::Design(a) => {
            let net = load_network(&a.network)?;
            let strategy: Strategy = a.strategy.parse()?;
            let max_m = a.max_m.unwrap_or(bench::budget(net.p));
            let out = run_until_unique(&net, strategy, a.l, a.k, max_m, cli.seed, &tol)?;
            emit(&cli.out, |w| out.state.write_history(w))?;
            if !out.unique {
                eprintln!("budget of {max_m} experiments exhausted before every row was certified");
            }
            Ok(())
        }
        Command::BenchUniqueness(a) => {
            let prof = a.profile.resolve();
            let l_range = if a.l.is_empty() { (1..=prof.p).collect() } else { a.l };
            let rows = bench::bench_uniqueness(prof.p, prof.k, prof.trials, &strategies(&a.strategies)?, &l_range, cli.seed, &tol)?;
            emit(&cli.out, |w| bench::write_csv(w, &rows))
        }
        Command::BenchCoherence(a) => {
            let prof = a.profile.resolve();
            let rows = bench::bench_coherence(prof.p, prof.k, &a.gain_bounds, prof.trials, cli.seed, &tol)?;
            emit(&cli.out, |w| bench::write_csv(w, &rows))
        }
        Command::BenchBp(a) => {
            let prof = a.profile.resolve();
            let rows = bench::bench_bp(prof.p, prof.k, a.l, prof.trials, &strategies(&a.strategies)?, cli.seed, &tol)?;
            emit(&cli.out, |w| bench::write_csv(w, &rows))
        }
    }
}

/// Parse `args` and run, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

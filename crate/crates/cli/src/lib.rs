//! Command-line driver: argument parsing, seed-set selection, record output
//! and the relative-error benchmark.

pub mod bench;
pub mod commands;
pub mod record;

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use outinf_core::{load_edge_list, ProbabilisticGraph, RandomStream, SeedSet, WeightingModel};

pub use record::{Format, RunRecord};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<outinf_core::Error> for CliError {
    fn from(e: outinf_core::Error) -> Self {
        let code = match e {
            outinf_core::Error::Capacity(_) => EXIT_CAPACITY,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "outinf", version, about = "Outward influence estimation and maximization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate influence or outward influence of seed sets.
    Estimate(commands::EstimateArgs),
    /// Exact values by enumerating live-edge worlds (small graphs only).
    Exact(commands::ExactArgs),
    /// Build or query a reverse outward sketch.
    #[command(subcommand)]
    Oracle(commands::OracleCommand),
    /// Influence maximization.
    Im(commands::ImArgs),
    /// Relative-error benchmark against exact or high-precision truth.
    Bench(bench::BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// Edge list with lines `u v [w]`.
    #[arg(long)]
    pub graph: PathBuf,
    /// wc, const=P or file.
    #[arg(long, default_value = "file", value_parser = parse_weights)]
    pub weights: WeightingModel,
}

fn parse_weights(s: &str) -> Result<WeightingModel, String> {
    WeightingModel::from_str(s).map_err(|e| e.to_string())
}

impl GraphArgs {
    pub fn load(&self) -> Result<ProbabilisticGraph, CliError> {
        load_graph(&self.graph, self.weights)
    }
}

pub fn load_graph(path: &Path, weights: WeightingModel) -> Result<ProbabilisticGraph, CliError> {
    let f = File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(load_edge_list(BufReader::new(f), weights)?)
}

#[derive(Args, Debug, Clone)]
pub struct SeedArgs {
    /// Seed sets as comma-separated labels; separate several sets with `;`.
    #[arg(long, conflicts_with_all = ["seed_size", "num_sets"])]
    pub seeds: Option<String>,
    /// Size of each random seed set.
    #[arg(long, requires = "num_sets")]
    pub seed_size: Option<usize>,
    /// Number of random seed sets.
    #[arg(long, requires = "seed_size")]
    pub num_sets: Option<usize>,
}

impl SeedArgs {
    pub fn resolve(&self, g: &ProbabilisticGraph, rng_seed: u64) -> Result<Vec<SeedSet>, CliError> {
        match (&self.seeds, self.seed_size, self.num_sets) {
            (Some(text), _, _) => parse_seed_sets(g, text),
            (None, Some(k), Some(num)) => random_seed_sets(g, k, num, rng_seed),
            _ => Err(CliError::usage("give --seeds or both --seed-size and --num-sets")),
        }
    }
}

pub fn parse_seed_sets(g: &ProbabilisticGraph, text: &str) -> Result<Vec<SeedSet>, CliError> {
    let mut sets = Vec::new();
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let labels = part
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::usage(format!("bad node label '{t}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        sets.push(SeedSet::from_labels(g, &labels)?);
    }
    if sets.is_empty() {
        return Err(CliError::usage("no seed sets given"));
    }
    Ok(sets)
}

/// `num` seed sets of `k` distinct nodes each, drawn uniformly; repeated
/// sets are redrawn while distinct ones remain likely.
pub fn random_seed_sets(g: &ProbabilisticGraph, k: usize, num: usize, rng_seed: u64) -> Result<Vec<SeedSet>, CliError> {
    let n = g.node_count();
    if num == 0 {
        return Err(CliError::usage("--num-sets must be at least 1"));
    }
    if k == 0 || k > n {
        return Err(CliError::usage(format!("--seed-size must lie in 1..={n}")));
    }
    let mut rng = RandomStream::new(rng_seed, u64::MAX);
    let mut seen = std::collections::HashSet::new();
    let mut sets = Vec::with_capacity(num);
    while sets.len() < num {
        let mut tries = 0;
        let set = loop {
            let idx = rand::seq::index::sample(&mut rng, n, k);
            let ids: Vec<u32> = idx.iter().map(|i| i as u32).collect();
            let set = SeedSet::from_indices(g, &ids)?;
            tries += 1;
            if seen.insert(set.nodes().to_vec()) || tries >= 64 {
                break set;
            }
        };
        sets.push(set);
    }
    Ok(sets)
}

pub fn labels_of(g: &ProbabilisticGraph, s: &SeedSet) -> String {
    s.nodes()
        .iter()
        .map(|&u| g.label(u).to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

impl RunArgs {
    pub fn options(&self) -> Result<outinf_core::RunOptions, CliError> {
        if self.threads == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        Ok(outinf_core::RunOptions::new(self.rng_seed).with_threads(self.threads)?)
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Report wall_ms as 0 so that reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

impl OutputArgs {
    pub fn writer(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?,
            )),
            None => Box::new(BufWriter::new(std::io::stdout().lock())),
        })
    }

    pub fn emit<T: serde::Serialize>(&self, records: &[T]) -> Result<(), CliError> {
        let mut w = self.writer()?;
        record::write_records(&mut w, records, self.format)?;
        w.flush()?;
        Ok(())
    }
}

pub fn check_eps_delta(eps: f64, delta: f64) -> Result<(), CliError> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(CliError::usage(format!(
            "--eps and --delta must lie in (0, 1), got {eps} and {delta}"
        )));
    }
    Ok(())
}

/// Parses and runs a command line, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Exact(a) => commands::exact(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Im(a) => commands::im(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

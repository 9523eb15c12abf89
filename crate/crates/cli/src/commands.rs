use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Subcommand, ValueEnum};
use outinf_core::estimators::{mc_fixed_influence, mc_fixed_outward, siea, siea_lt, soiea};
use outinf_core::exact::{brute_force_opt, exact_distributions};
use outinf_core::im::{greedy_with_bound, out_ssa, tune_parameters, PrecisionParams, ONE_MINUS_INV_E};
use outinf_core::rois::{RoisModel, SketchStore};
use outinf_core::{EstimationResult, ProbabilisticGraph, RunOptions, SeedSet};
use serde::{Deserialize, Serialize};

use crate::{check_eps_delta, labels_of, CliError, GraphArgs, OutputArgs, RunArgs, RunRecord, SeedArgs};

/// Precision of the high-precision reference estimate.
pub const GOLD_EPS: f64 = 0.005;
const GOLD_SEED_MASK: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Soiea,
    Siea,
    SieaLt,
    /// Fixed-budget forward simulation of the influence.
    Mc(u64),
    /// Fixed-budget forward simulation of the outward influence.
    McOut(u64),
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let budget = |t: &str| match t.parse::<u64>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(format!("bad sample budget '{t}'")),
        };
        match s {
            "soiea" => Ok(Method::Soiea),
            "siea" => Ok(Method::Siea),
            "siea-lt" => Ok(Method::SieaLt),
            _ => {
                if let Some(t) = s.strip_prefix("mc=") {
                    Ok(Method::Mc(budget(t)?))
                } else if let Some(t) = s.strip_prefix("mc-out=") {
                    Ok(Method::McOut(budget(t)?))
                } else {
                    Err(format!(
                        "unknown method '{s}' (expected soiea, siea, siea-lt, mc=T or mc-out=T)"
                    ))
                }
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Soiea => f.write_str("soiea"),
            Method::Siea => f.write_str("siea"),
            Method::SieaLt => f.write_str("siea-lt"),
            Method::Mc(t) => write!(f, "mc={t}"),
            Method::McOut(t) => write!(f, "mc-out={t}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Influence,
    Outward,
}

impl Method {
    /// What the method's raw estimate measures.
    pub fn quantity(self) -> Quantity {
        match self {
            Method::Soiea | Method::McOut(_) => Quantity::Outward,
            _ => Quantity::Influence,
        }
    }

    pub fn adaptive(self) -> bool {
        !matches!(self, Method::Mc(_) | Method::McOut(_))
    }

    pub fn run(
        self,
        g: &ProbabilisticGraph,
        s: &SeedSet,
        eps: f64,
        delta: f64,
        opts: &RunOptions,
    ) -> Result<EstimationResult, CliError> {
        Ok(match self {
            Method::Soiea => soiea(g, s, eps, delta, opts)?,
            Method::Siea => siea(g, s, eps, delta, opts)?,
            Method::SieaLt => siea_lt(g, s, eps, delta, opts)?,
            Method::Mc(t) => mc_fixed_influence(g, s, t, opts)?,
            Method::McOut(t) => mc_fixed_outward(g, s, t, opts)?,
        })
    }
}

/// Converts a value of quantity `from` for seed set size `k` into `to`.
pub fn convert(value: f64, from: Quantity, to: Quantity, k: usize) -> f64 {
    match (from, to) {
        (Quantity::Influence, Quantity::Outward) => value - k as f64,
        (Quantity::Outward, Quantity::Influence) => value + k as f64,
        _ => value,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Truth {
    None,
    Exact,
    SieaGold,
}

pub fn gold_delta(n: usize) -> f64 {
    (1.0 / n as f64).min(0.5)
}

/// High-precision reference: the adaptive estimator at `eps = 0.005`,
/// `delta = 1/n`, on a seed stream disjoint from the estimator under test.
pub fn siea_gold(
    g: &ProbabilisticGraph,
    s: &SeedSet,
    quantity: Quantity,
    opts: &RunOptions,
) -> Result<EstimationResult, CliError> {
    let mut o = opts.with_seed(opts.seed ^ GOLD_SEED_MASK);
    o.normalized_variance_budget = true;
    let delta = gold_delta(g.node_count());
    Ok(match quantity {
        Quantity::Outward => soiea(g, s, GOLD_EPS, delta, &o)?,
        Quantity::Influence => siea(g, s, GOLD_EPS, delta, &o)?,
    })
}

pub fn truth_value(
    g: &ProbabilisticGraph,
    s: &SeedSet,
    truth: Truth,
    quantity: Quantity,
    opts: &RunOptions,
) -> Result<Option<f64>, CliError> {
    Ok(match truth {
        Truth::None => None,
        Truth::Exact => {
            let r = exact_distributions(g, s)?;
            Some(match quantity {
                Quantity::Influence => r.influence,
                Quantity::Outward => r.outward,
            })
        }
        Truth::SieaGold => Some(siea_gold(g, s, quantity, opts)?.estimate),
    })
}

pub fn elapsed_ms(start: Instant, timing: bool) -> f64 {
    if timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// soiea, siea, siea-lt, mc=T or mc-out=T.
    #[arg(long, default_value = "soiea")]
    pub method: Method,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[command(flatten)]
    pub seeds: SeedArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Reference value for rel_error_pct.
    #[arg(long, value_enum, default_value_t = Truth::None)]
    pub truth: Truth,
    /// Divide the variance-pair budget by the support width.
    #[arg(long)]
    pub variance_budget_normalized: bool,
}

pub struct EstimateJob<'a> {
    pub method: Method,
    pub eps: f64,
    pub delta: f64,
    pub truth: Truth,
    pub opts: &'a RunOptions,
    pub timing: bool,
}

/// One record per seed set; set `i` runs with seed `opts.seed + i`.
pub fn estimate_records(
    g: &ProbabilisticGraph,
    sets: &[SeedSet],
    job: &EstimateJob<'_>,
) -> Result<Vec<RunRecord>, CliError> {
    let mut out = Vec::with_capacity(sets.len());
    for (i, s) in sets.iter().enumerate() {
        let opts = job.opts.with_seed(job.opts.seed.wrapping_add(i as u64));
        let start = Instant::now();
        let r = job.method.run(g, s, job.eps, job.delta, &opts)?;
        let wall_ms = elapsed_ms(start, job.timing);
        let truth = truth_value(g, s, job.truth, job.method.quantity(), &opts)?;
        let adaptive = job.method.adaptive();
        out.push(
            RunRecord {
                method: job.method.to_string(),
                seed_set: labels_of(g, s),
                estimate: r.estimate,
                truth: None,
                rel_error_pct: None,
                samples: r.samples_used,
                observed_influence: r.observed_sum,
                wall_ms,
                rng_seed: opts.seed,
                threads: opts.threads,
                eps: adaptive.then_some(job.eps),
                delta: adaptive.then_some(job.delta),
            }
            .with_truth(truth),
        );
    }
    Ok(out)
}

pub fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    check_eps_delta(a.eps, a.delta)?;
    let mut opts = a.run.options()?;
    opts.normalized_variance_budget = a.variance_budget_normalized;
    let g = a.graph.load()?;
    let sets = a.seeds.resolve(&g, a.run.rng_seed)?;
    let job = EstimateJob {
        method: a.method,
        eps: a.eps,
        delta: a.delta,
        truth: a.truth,
        opts: &opts,
        timing: !a.output.no_timing,
    };
    let records = estimate_records(&g, &sets, &job)?;
    a.output.emit(&records)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExactMode {
    Influence,
    Outward,
    Both,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub seeds: SeedArgs,
    /// Seed for random seed-set selection.
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long, value_enum, default_value_t = ExactMode::Both)]
    pub mode: ExactMode,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn exact(a: &ExactArgs) -> Result<(), CliError> {
    let g = a.graph.load()?;
    let sets = a.seeds.resolve(&g, a.rng_seed)?;
    let mut records = Vec::new();
    for s in &sets {
        let start = Instant::now();
        let r = exact_distributions(&g, s)?;
        let wall_ms = elapsed_ms(start, !a.output.no_timing);
        let make = |method: &str, value: f64| {
            RunRecord {
                method: method.to_string(),
                seed_set: labels_of(&g, s),
                estimate: value,
                truth: None,
                rel_error_pct: None,
                samples: 0,
                observed_influence: 0.0,
                wall_ms,
                rng_seed: a.rng_seed,
                threads: 1,
                eps: None,
                delta: None,
            }
            .with_truth(Some(value))
        };
        if a.mode != ExactMode::Outward {
            records.push(make("exact", r.influence));
        }
        if a.mode != ExactMode::Influence {
            records.push(make("exact-out", r.outward));
        }
    }
    a.output.emit(&records)
}

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// Generate samples and persist the sketch.
    Build(OracleBuildArgs),
    /// Answer seed-set queries from a persisted sketch.
    Query(OracleQueryArgs),
}

#[derive(Args, Debug)]
pub struct OracleBuildArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub sketch_out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct OracleQueryArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub sketch: PathBuf,
    #[command(flatten)]
    pub seeds: SeedArgs,
    /// Seed for random seed-set selection.
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long, value_enum, default_value_t = Quantity::Influence)]
    pub mode: Quantity,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn oracle(cmd: &OracleCommand) -> Result<(), CliError> {
    match cmd {
        OracleCommand::Build(a) => {
            if a.samples == 0 {
                return Err(CliError::usage("--samples must be at least 1"));
            }
            let opts = a.run.options()?;
            let g = a.graph.load()?;
            let model = RoisModel::new(&g);
            let store = SketchStore::build(&model, a.samples, &opts)?;
            let f =
                File::create(&a.sketch_out).map_err(|e| CliError::data(format!("{}: {e}", a.sketch_out.display())))?;
            let mut w = BufWriter::new(f);
            store.write_to(&mut w)?;
            w.flush()?;
            Ok(())
        }
        OracleCommand::Query(a) => {
            let g = a.graph.load()?;
            let f = File::open(&a.sketch).map_err(|e| CliError::data(format!("{}: {e}", a.sketch.display())))?;
            let store = SketchStore::read_from(BufReader::new(f))?;
            if store.node_count() != g.node_count() {
                return Err(CliError::data(format!(
                    "sketch covers {} nodes but the graph has {}",
                    store.node_count(),
                    g.node_count()
                )));
            }
            let sets = a.seeds.resolve(&g, a.rng_seed)?;
            let mut q = store.query();
            let mut records = Vec::new();
            for s in &sets {
                let start = Instant::now();
                let (method, value) = match a.mode {
                    Quantity::Influence => ("oracle", q.influence(s)),
                    Quantity::Outward => ("oracle-out", q.outward(s)),
                };
                let (hits, _) = q.coverage(s);
                records.push(RunRecord {
                    method: method.to_string(),
                    seed_set: labels_of(&g, s),
                    estimate: value,
                    truth: None,
                    rel_error_pct: None,
                    samples: store.len() as u64,
                    observed_influence: hits as f64,
                    wall_ms: elapsed_ms(start, !a.output.no_timing),
                    rng_seed: a.rng_seed,
                    threads: 1,
                    eps: None,
                    delta: None,
                });
            }
            a.output.emit(&records)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    OutSsa,
    Greedy,
    Brute,
}

#[derive(Args, Debug)]
pub struct ImArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum, default_value_t = Algo::OutSsa)]
    pub algo: Algo,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    /// Target approximation ratio for out-ssa.
    #[arg(long, default_value_t = 0.4)]
    pub rho: f64,
    /// Choose eps1, eps2, eps3 from the data instead of an even split.
    #[arg(long)]
    pub auto_tune: bool,
    /// Sketch size for greedy.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImRecord {
    pub algo: String,
    pub k: usize,
    pub seed_set: String,
    pub estimate: f64,
    pub bound_achieved: Option<f64>,
    pub iterations: usize,
    pub samples: u64,
    pub converged: bool,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub eps3: Option<f64>,
    pub wall_ms: f64,
    pub rng_seed: u64,
    pub threads: usize,
}

pub fn im(a: &ImArgs) -> Result<(), CliError> {
    if a.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let opts = a.run.options()?;
    let g = a.graph.load()?;
    let start = Instant::now();
    let mut rec = ImRecord {
        algo: format!("{:?}", a.algo).to_lowercase(),
        k: a.k,
        seed_set: String::new(),
        estimate: 0.0,
        bound_achieved: None,
        iterations: 0,
        samples: 0,
        converged: true,
        eps1: None,
        eps2: None,
        eps3: None,
        wall_ms: 0.0,
        rng_seed: a.run.rng_seed,
        threads: a.run.threads,
    };
    match a.algo {
        Algo::Brute => {
            let (s, value) = brute_force_opt(&g, a.k)?;
            rec.algo = "brute".into();
            rec.seed_set = labels_of(&g, &s);
            rec.estimate = value;
            rec.bound_achieved = Some(1.0);
        }
        Algo::Greedy => {
            if a.samples == 0 {
                return Err(CliError::usage("--samples must be at least 1"));
            }
            let model = RoisModel::new(&g);
            let store = SketchStore::build(&model, a.samples, &opts)?;
            let r = greedy_with_bound(&store, a.k)?;
            rec.algo = "greedy".into();
            rec.seed_set = labels_of(&g, &r.seed_set);
            rec.estimate = r.estimate;
            rec.bound_achieved = Some(r.bound);
            rec.samples = store.len() as u64;
        }
        Algo::OutSsa => {
            check_eps_delta(a.eps, a.delta)?;
            if !(a.rho > 0.0 && a.rho <= ONE_MINUS_INV_E - a.eps) {
                return Err(CliError::usage(format!(
                    "--rho must lie in (0, 1 - 1/e - eps = {:.6}]",
                    ONE_MINUS_INV_E - a.eps
                )));
            }
            let mut params = PrecisionParams::split(a.eps, a.delta, a.rho)?;
            if a.auto_tune {
                let t = tune_parameters(&g, a.k, a.eps, a.delta, a.delta / 2.0, a.delta / 2.0, a.rho, &opts)?;
                if t.converged {
                    params = t.params;
                }
            }
            let r = out_ssa(&g, a.k, &params, &opts)?;
            rec.algo = "out-ssa".into();
            rec.seed_set = labels_of(&g, &r.greedy.seed_set);
            rec.estimate = r.greedy.estimate;
            rec.bound_achieved = r.guarantee;
            rec.iterations = r.iterations;
            rec.samples = r.samples as u64;
            rec.converged = r.converged;
            rec.eps1 = Some(params.eps1);
            rec.eps2 = Some(params.eps2);
            rec.eps3 = Some(params.eps3);
        }
    }
    rec.wall_ms = elapsed_ms(start, !a.output.no_timing);
    a.output.emit(&[rec])
}

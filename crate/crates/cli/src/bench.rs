use std::time::Instant;

use clap::Args;
use outinf_core::exact::exact_distributions;
use outinf_core::{ProbabilisticGraph, RunOptions, SeedSet};
use serde::{Deserialize, Serialize};

use crate::commands::{convert, elapsed_ms, gold_delta, siea_gold, Method, Quantity, Truth, GOLD_EPS};
use crate::record::write_records;
use crate::{check_eps_delta, labels_of, CliError, GraphArgs, OutputArgs, RunArgs, RunRecord, SeedArgs};

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub seeds: SeedArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated methods, e.g. `soiea,mc=10000`.
    #[arg(long, value_delimiter = ',', default_value = "soiea,mc-out=10000")]
    pub methods: Vec<Method>,
    #[arg(long, value_enum, default_value_t = BenchTruth::SieaGold)]
    pub truth: BenchTruth,
    /// Quantity every estimate is compared in.
    #[arg(long, value_enum, default_value_t = Quantity::Outward)]
    pub quantity: Quantity,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Also write the per-run records here.
    #[arg(long)]
    pub records: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchTruth {
    Exact,
    SieaGold,
}

impl From<BenchTruth> for Truth {
    fn from(t: BenchTruth) -> Truth {
        match t {
            BenchTruth::Exact => Truth::Exact,
            BenchTruth::SieaGold => Truth::SieaGold,
        }
    }
}

pub struct BenchConfig<'a> {
    pub methods: Vec<Method>,
    pub truth: BenchTruth,
    pub quantity: Quantity,
    pub eps: f64,
    pub delta: f64,
    pub opts: &'a RunOptions,
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub avg_rel_error_pct: Option<f64>,
    pub max_rel_error_pct: Option<f64>,
    pub avg_samples: f64,
    pub total_wall_ms: f64,
    pub runs: usize,
    /// Runs whose truth is zero, so that relative error is undefined.
    pub undefined: usize,
}

pub struct BenchReport {
    pub truths: Vec<RunRecord>,
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl BenchReport {
    pub fn row(&self, method: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method)
    }
}

fn summarize(method: String, recs: &[&RunRecord]) -> SummaryRow {
    let errs: Vec<f64> = recs.iter().filter_map(|r| r.rel_error_pct).collect();
    let runs = recs.len();
    SummaryRow {
        method,
        avg_rel_error_pct: (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64),
        max_rel_error_pct: errs.iter().copied().reduce(f64::max),
        avg_samples: recs.iter().map(|r| r.samples as f64).sum::<f64>() / runs.max(1) as f64,
        total_wall_ms: recs.iter().map(|r| r.wall_ms).sum(),
        runs,
        undefined: runs - errs.len(),
    }
}

/// Runs every method on every seed set and compares against the truth, all
/// in `cfg.quantity`. Set `i` uses seed `opts.seed + i` for every method.
pub fn bench(g: &ProbabilisticGraph, sets: &[SeedSet], cfg: &BenchConfig<'_>) -> Result<BenchReport, CliError> {
    check_eps_delta(cfg.eps, cfg.delta)?;
    if cfg.methods.is_empty() {
        return Err(CliError::usage("no methods given"));
    }
    let truth_name = match cfg.truth {
        BenchTruth::Exact => "truth:exact",
        BenchTruth::SieaGold => "truth:siea-gold",
    };
    let mut truths = Vec::with_capacity(sets.len());
    for (i, s) in sets.iter().enumerate() {
        let opts = cfg.opts.with_seed(cfg.opts.seed.wrapping_add(i as u64));
        let start = Instant::now();
        let (value, samples, observed, eps, delta) = match cfg.truth {
            BenchTruth::Exact => {
                let r = exact_distributions(g, s)?;
                let v = match cfg.quantity {
                    Quantity::Influence => r.influence,
                    Quantity::Outward => r.outward,
                };
                (v, 0, 0.0, None, None)
            }
            BenchTruth::SieaGold => {
                let r = siea_gold(g, s, cfg.quantity, &opts)?;
                (
                    r.estimate,
                    r.samples_used,
                    r.observed_sum,
                    Some(GOLD_EPS),
                    Some(gold_delta(g.node_count())),
                )
            }
        };
        truths.push(RunRecord {
            method: truth_name.to_string(),
            seed_set: labels_of(g, s),
            estimate: value,
            truth: Some(value),
            rel_error_pct: None,
            samples,
            observed_influence: observed,
            wall_ms: elapsed_ms(start, cfg.timing),
            rng_seed: opts.seed ^ (1 << 63),
            threads: opts.threads,
            eps,
            delta,
        });
    }

    let mut records = Vec::with_capacity(sets.len() * cfg.methods.len());
    for &m in &cfg.methods {
        for (i, s) in sets.iter().enumerate() {
            let opts = cfg.opts.with_seed(cfg.opts.seed.wrapping_add(i as u64));
            let start = Instant::now();
            let r = m.run(g, s, cfg.eps, cfg.delta, &opts)?;
            let wall_ms = elapsed_ms(start, cfg.timing);
            records.push(
                RunRecord {
                    method: m.to_string(),
                    seed_set: labels_of(g, s),
                    estimate: convert(r.estimate, m.quantity(), cfg.quantity, s.len()),
                    truth: None,
                    rel_error_pct: None,
                    samples: r.samples_used,
                    observed_influence: r.observed_sum,
                    wall_ms,
                    rng_seed: opts.seed,
                    threads: opts.threads,
                    eps: m.adaptive().then_some(cfg.eps),
                    delta: m.adaptive().then_some(cfg.delta),
                }
                .with_truth(truths[i].truth),
            );
        }
    }

    let mut summary = Vec::with_capacity(cfg.methods.len() + 1);
    for &m in &cfg.methods {
        let name = m.to_string();
        let recs: Vec<&RunRecord> = records.iter().filter(|r| r.method == name).collect();
        summary.push(summarize(name, &recs));
    }
    let mut truth_row = summarize(truth_name.to_string(), &truths.iter().collect::<Vec<_>>());
    truth_row.undefined = truths.iter().filter(|t| t.estimate <= 0.0).count();
    summary.push(truth_row);
    Ok(BenchReport {
        truths,
        records,
        summary,
    })
}

pub fn run(a: &BenchArgs) -> Result<(), CliError> {
    let opts = a.run.options()?;
    let g = a.graph.load()?;
    let sets = a.seeds.resolve(&g, a.run.rng_seed)?;
    let cfg = BenchConfig {
        methods: a.methods.clone(),
        truth: a.truth,
        quantity: a.quantity,
        eps: a.eps,
        delta: a.delta,
        opts: &opts,
        timing: !a.output.no_timing,
    };
    let report = bench(&g, &sets, &cfg)?;
    if let Some(path) = &a.records {
        let f = std::fs::File::create(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        let all: Vec<&RunRecord> = report.truths.iter().chain(&report.records).collect();
        write_records(&mut w, &all, a.output.format)?;
        std::io::Write::flush(&mut w)?;
    }
    a.output.emit(&report.summary)
}

//! Mean estimation for bounded random variables: a stopping-rule estimator
//! with a range-aware threshold, a variance-adaptive two-stage estimator on
//! top of it, and a fixed-budget baseline.
//!
//! Sources hand out per-worker draw states. With one thread draws are taken
//! one at a time exactly as the sequential rule prescribes; with more, each
//! worker draws batches of `batch` values, partial sums are merged in worker
//! order and the stopping threshold is checked after every merged batch.

use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;
use crate::rng::{RandomStream, FAMILY_MAIN, FAMILY_PAIRS, FAMILY_PILOT};

/// A per-worker sampler state.
pub trait Draw {
    fn draw(&mut self, rng: &mut RandomStream) -> f64;
}

/// A random variable with known support `[a, b]`, `0 <= a <= b`.
pub trait BoundedSource: Sync {
    type Worker<'a>: Draw + Send
    where
        Self: 'a;

    fn bounds(&self) -> (f64, f64);

    fn worker(&self) -> Self::Worker<'_>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    FastPathReturnedA,
    BudgetExceeded,
    /// The answer is known in closed form; nothing was sampled.
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimationResult {
    pub estimate: f64,
    pub samples_used: u64,
    /// Sum of every value drawn, across all stages.
    pub observed_sum: f64,
    pub termination: Termination,
}

impl EstimationResult {
    pub fn analytic(value: f64) -> Self {
        EstimationResult {
            estimate: value,
            samples_used: 0,
            observed_sum: 0.0,
            termination: Termination::Analytic,
        }
    }
}

pub const DEFAULT_SAMPLE_CAP: u64 = 1 << 32;
pub const DEFAULT_BATCH: usize = 256;

#[derive(Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub threads: usize,
    pub batch: usize,
    pub sample_cap: u64,
    /// Divide the variance-pair budget by the support width.
    pub normalized_variance_budget: bool,
    /// Upper bound on sketch storage in bytes.
    pub memory_limit: Option<usize>,
    pool: Option<Arc<ThreadPool>>,
}

impl std::fmt::Debug for RunOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunOptions")
            .field("seed", &self.seed)
            .field("threads", &self.threads)
            .field("batch", &self.batch)
            .field("sample_cap", &self.sample_cap)
            .field("normalized_variance_budget", &self.normalized_variance_budget)
            .field("memory_limit", &self.memory_limit)
            .finish()
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions::new(0)
    }
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        RunOptions {
            seed,
            threads: 1,
            batch: DEFAULT_BATCH,
            sample_cap: DEFAULT_SAMPLE_CAP,
            normalized_variance_budget: false,
            memory_limit: None,
            pool: None,
        }
    }

    /// Uses `threads` workers, building a dedicated pool when more than one.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        if threads == 0 {
            return domain("thread count must be at least 1");
        }
        self.threads = threads;
        self.pool = if threads > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Capacity(format!("cannot start thread pool: {e}")))?;
            Some(Arc::new(pool))
        } else {
            None
        };
        Ok(self)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        RunOptions { seed, ..self.clone() }
    }

    pub(crate) fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }
}

/// `(2 + 2eps/3) ln(2/delta) / eps^2`.
pub fn c_factor(eps: f64, delta: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    Ok((2.0 + 2.0 * eps / 3.0) * (2.0 / delta).ln() / (eps * eps))
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        domain(format!("{name} must lie in (0, 1), got {x}"))
    }
}

fn check_bounds(a: f64, b: f64) -> Result<()> {
    if a >= 0.0 && b >= a && b.is_finite() {
        Ok(())
    } else {
        domain(format!("invalid support [{a}, {b}]"))
    }
}

/// Threshold parameters of the stopping rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GsraThreshold {
    pub eps_prime: f64,
    pub upsilon: f64,
}

/// `None` when the support is narrow enough (`b - a < eps b`) that `a`
/// itself is an `eps`-approximation.
pub fn gsra_threshold(eps: f64, delta: f64, a: f64, b: f64) -> Result<Option<GsraThreshold>> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    check_bounds(a, b)?;
    let width = b - a;
    if width < eps * b || width == 0.0 {
        return Ok(None);
    }
    let eps_prime = eps * (1.0 - eps * b / ((2.0 + 2.0 * eps / 3.0) * (2.0 / delta).ln() * width));
    let upsilon = (1.0 + eps) * c_factor(eps_prime, delta)? * width;
    Ok(Some(GsraThreshold { eps_prime, upsilon }))
}

/// Per-worker sampling state over one source and one stream family.
pub struct SampleStream<'s, S: BoundedSource + 's> {
    workers: Vec<(S::Worker<'s>, RandomStream)>,
    opts: &'s RunOptions,
}

impl<'s, S: BoundedSource + 's> SampleStream<'s, S> {
    pub fn new(source: &'s S, opts: &'s RunOptions, family: u32) -> Self {
        Self::with_block(source, opts, family, 0)
    }

    /// Worker `w` uses block `first_block + w` of `family`.
    pub fn with_block(source: &'s S, opts: &'s RunOptions, family: u32, first_block: u32) -> Self {
        let workers = (0..opts.threads.max(1) as u32)
            .map(|w| {
                (
                    source.worker(),
                    RandomStream::for_family(opts.seed, family, first_block + w),
                )
            })
            .collect();
        SampleStream { workers, opts }
    }

    fn parallel(&self) -> bool {
        self.workers.len() > 1
    }

    /// Draws until the running sum reaches `threshold` or `cap` draws have
    /// been taken. Returns `(count, sum, reached)`.
    pub fn draw_until(&mut self, threshold: f64, cap: u64) -> (u64, f64, bool) {
        let mut count = 0u64;
        let mut sum = CompensatedSum::new();
        if !self.parallel() {
            let (w, rng) = &mut self.workers[0];
            while count < cap {
                sum.add(w.draw(rng));
                count += 1;
                if sum.value() >= threshold {
                    return (count, sum.value(), true);
                }
            }
            return (count, sum.value(), false);
        }
        let batch = self.opts.batch.max(1);
        while count < cap {
            let partials: Vec<CompensatedSum> = self.opts.install(|| {
                self.workers
                    .par_iter_mut()
                    .map(|(w, rng)| (0..batch).map(|_| w.draw(rng)).collect())
                    .collect()
            });
            for p in &partials {
                sum.merge(p);
                count += batch as u64;
                if sum.value() >= threshold {
                    return (count, sum.value(), true);
                }
            }
        }
        (count, sum.value(), false)
    }

    /// Sum of exactly `n` draws, split deterministically across workers.
    pub fn draw_n(&mut self, n: u64) -> f64 {
        let shares = self.shares(n);
        if !self.parallel() {
            let (w, rng) = &mut self.workers[0];
            return (0..n).map(|_| w.draw(rng)).collect::<CompensatedSum>().value();
        }
        let partials: Vec<CompensatedSum> = self.opts.install(|| {
            self.workers
                .par_iter_mut()
                .zip(shares)
                .map(|((w, rng), k)| (0..k).map(|_| w.draw(rng)).collect())
                .collect()
        });
        let mut total = CompensatedSum::new();
        partials.iter().for_each(|p| total.merge(p));
        total.value()
    }

    /// `sum_i (X_{2i-1} - X_{2i})^2 / 2` over `pairs` fresh pairs, plus the
    /// plain sum of all `2 pairs` values.
    pub fn pair_sq_diff(&mut self, pairs: u64) -> (f64, f64) {
        let shares = self.shares(pairs);
        let run = |w: &mut S::Worker<'s>, rng: &mut RandomStream, k: u64| {
            let (mut sq, mut total) = (0.0, 0.0);
            for _ in 0..k {
                let x1 = w.draw(rng);
                let x2 = w.draw(rng);
                sq += (x1 - x2) * (x1 - x2) / 2.0;
                total += x1 + x2;
            }
            (sq, total)
        };
        if !self.parallel() {
            let (w, rng) = &mut self.workers[0];
            return run(w, rng, pairs);
        }
        let partials: Vec<(f64, f64)> = self.opts.install(|| {
            self.workers
                .par_iter_mut()
                .zip(shares)
                .map(|((w, rng), k)| run(w, rng, k))
                .collect()
        });
        partials
            .into_iter()
            .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1))
    }

    fn shares(&self, n: u64) -> Vec<u64> {
        let t = self.workers.len() as u64;
        (0..t).map(|w| n / t + u64::from(w < n % t)).collect()
    }
}

fn gsra_on_family<S: BoundedSource>(
    source: &S,
    eps: f64,
    delta: f64,
    opts: &RunOptions,
    family: u32,
) -> Result<EstimationResult> {
    let (a, b) = source.bounds();
    let Some(th) = gsra_threshold(eps, delta, a, b)? else {
        return Ok(EstimationResult {
            estimate: a,
            samples_used: 0,
            observed_sum: 0.0,
            termination: Termination::FastPathReturnedA,
        });
    };
    let mut stream = SampleStream::new(source, opts, family);
    let (count, sum, reached) = stream.draw_until(th.upsilon, opts.sample_cap);
    Ok(EstimationResult {
        estimate: if count > 0 { sum / count as f64 } else { a },
        samples_used: count,
        observed_sum: sum,
        termination: if reached {
            Termination::Converged
        } else {
            Termination::BudgetExceeded
        },
    })
}

/// Stopping-rule estimator: draws until the running sum reaches `Υ` and
/// returns the sample mean.
pub fn gsra<S: BoundedSource>(source: &S, eps: f64, delta: f64, opts: &RunOptions) -> Result<EstimationResult> {
    gsra_on_family(source, eps, delta, opts, FAMILY_MAIN)
}

/// Intermediate quantities of the variance-adaptive estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RsaTrace {
    pub pilot: EstimationResult,
    pub upsilon2: f64,
    pub n_sigma: u64,
    pub delta_sum: f64,
    pub rho_hat: f64,
    pub final_count: u64,
}

/// Variance-adaptive estimator. For `eps >= 1/4` this is exactly [`gsra`].
/// Otherwise a rough pilot estimate at `sqrt(eps)`, a variance estimate from
/// independent pairs, and a final fixed-size mean sized by that variance.
pub fn rsa<S: BoundedSource>(source: &S, eps: f64, delta: f64, opts: &RunOptions) -> Result<EstimationResult> {
    rsa_traced(source, eps, delta, opts).map(|(r, _)| r)
}

pub fn rsa_traced<S: BoundedSource>(
    source: &S,
    eps: f64,
    delta: f64,
    opts: &RunOptions,
) -> Result<(EstimationResult, Option<RsaTrace>)> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    if eps >= 0.25 {
        return Ok((gsra(source, eps, delta, opts)?, None));
    }
    let (a, b) = source.bounds();
    let Some(th) = gsra_threshold(eps, delta, a, b)? else {
        return Ok((
            EstimationResult {
                estimate: a,
                samples_used: 0,
                observed_sum: 0.0,
                termination: Termination::FastPathReturnedA,
            },
            None,
        ));
    };
    let width = b - a;

    let pilot = gsra_on_family(source, eps.sqrt(), delta / 3.0, opts, FAMILY_PILOT)?;
    let mut used = pilot.samples_used;
    let mut observed = pilot.observed_sum;
    let exceeded = |used: u64, observed: f64, estimate: f64| EstimationResult {
        estimate,
        samples_used: used,
        observed_sum: observed,
        termination: Termination::BudgetExceeded,
    };
    if pilot.termination == Termination::BudgetExceeded {
        return Ok((pilot, None));
    }
    let mu = pilot.estimate;
    if mu <= 0.0 {
        return Ok((exceeded(used, observed, 0.0), None));
    }

    let se = eps.sqrt();
    let upsilon2 = 2.0 * (1.0 + se) / (1.0 - se) * (1.0 + 1.5f64.ln() / (2.0 / delta).ln()) * th.upsilon;
    let mut n_sigma_real = upsilon2 * eps / mu;
    if opts.normalized_variance_budget {
        n_sigma_real /= width;
    }
    let n_sigma_real = n_sigma_real.ceil().max(1.0);
    if n_sigma_real * 2.0 > (opts.sample_cap - used.min(opts.sample_cap)) as f64 {
        return Ok((exceeded(used, observed, mu), None));
    }
    let n_sigma = n_sigma_real as u64;
    let mut pairs = SampleStream::new(source, opts, FAMILY_PAIRS);
    let (delta_sum, pair_total) = pairs.pair_sq_diff(n_sigma);
    used += 2 * n_sigma;
    observed += pair_total;
    let rho_hat = (delta_sum / n_sigma as f64).max(eps * mu * width);

    let t_real = (upsilon2 * rho_hat / (mu * mu * width)).ceil().max(1.0);
    if t_real > (opts.sample_cap - used.min(opts.sample_cap)) as f64 {
        return Ok((exceeded(used, observed, mu), None));
    }
    let t = t_real as u64;
    let mut main = SampleStream::new(source, opts, FAMILY_MAIN);
    let sum = main.draw_n(t);
    used += t;
    observed += sum;
    let result = EstimationResult {
        estimate: sum / t as f64,
        samples_used: used,
        observed_sum: observed,
        termination: Termination::Converged,
    };
    let trace = RsaTrace {
        pilot,
        upsilon2,
        n_sigma,
        delta_sum,
        rho_hat,
        final_count: t,
    };
    Ok((result, Some(trace)))
}

/// Mean of exactly `t` draws.
pub fn fixed_budget_mean<S: BoundedSource>(source: &S, t: u64, opts: &RunOptions) -> Result<EstimationResult> {
    if t == 0 {
        return domain("sample budget must be at least 1");
    }
    let mut stream = SampleStream::new(source, opts, FAMILY_MAIN);
    let sum = stream.draw_n(t);
    Ok(EstimationResult {
        estimate: sum / t as f64,
        samples_used: t,
        observed_sum: sum,
        termination: Termination::Converged,
    })
}

/// Bound on `Pr[mean >= (1 + eps) mu]` for `t` draws on `[a, b]`.
pub fn upper_tail_bound(eps: f64, t: u64, mu: f64, a: f64, b: f64) -> f64 {
    (-eps * eps * t as f64 * mu / ((2.0 + 2.0 * eps / 3.0) * (b - a))).exp()
}

/// Bound on `Pr[mean <= (1 - eps) mu]` for `t` draws on `[a, b]`.
pub fn lower_tail_bound(eps: f64, t: u64, mu: f64, a: f64, b: f64) -> f64 {
    (-eps * eps * t as f64 * mu / (2.0 * (b - a))).exp()
}

/// Simple finite-support source used by tests and benchmarks.
#[derive(Clone, Debug)]
pub struct DiscreteSource {
    values: Vec<f64>,
    cdf: Vec<f64>,
    bounds: (f64, f64),
}

impl DiscreteSource {
    /// Distribution over `values` with probabilities `probs`, declared on
    /// support `[a, b]`.
    pub fn new(values: &[f64], probs: &[f64], a: f64, b: f64) -> Result<Self> {
        check_bounds(a, b)?;
        if values.len() != probs.len() || values.is_empty() {
            return domain("values and probabilities must be nonempty and of equal length");
        }
        if values.iter().any(|&v| v < a || v > b) {
            return domain("value outside declared support");
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return domain("probabilities must be nonnegative and sum to 1");
        }
        let cdf = crate::sampler::cdf_from_masses(probs, total);
        Ok(DiscreteSource {
            values: values.to_vec(),
            cdf,
            bounds: (a, b),
        })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(&[0.0, 1.0], &[1.0 - p, p], 0.0, 1.0)
    }

    pub fn constant(mu: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(&[mu], &[1.0], a, b)
    }

    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        self.values
            .iter()
            .zip(&self.cdf)
            .map(|(&v, &c)| {
                let p = c - prev;
                prev = c;
                v * p
            })
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let mut prev = 0.0;
        self.values
            .iter()
            .zip(&self.cdf)
            .map(|(&v, &c)| {
                let p = c - prev;
                prev = c;
                (v - mu) * (v - mu) * p
            })
            .sum()
    }
}

pub struct DiscreteWorker<'a>(&'a DiscreteSource);

impl Draw for DiscreteWorker<'_> {
    #[inline]
    fn draw(&mut self, rng: &mut RandomStream) -> f64 {
        if self.0.values.len() == 1 {
            return self.0.values[0];
        }
        self.0.values[crate::sampler::pick(&self.0.cdf, rng.uniform())]
    }
}

impl BoundedSource for DiscreteSource {
    type Worker<'a> = DiscreteWorker<'a>;

    fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    fn worker(&self) -> DiscreteWorker<'_> {
        DiscreteWorker(self)
    }
}

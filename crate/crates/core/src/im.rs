//! Influence maximization on reverse outward sketches: lazy greedy with an
//! instance-specific approximation bound, an independent verification
//! estimator, the doubling stop-and-stare loop, and precision tuning.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Result};
use crate::graph::{NodeId, ProbabilisticGraph, SeedSet};
use crate::mean::{RunOptions, SampleStream};
use crate::numeric::log2_nodes;
use crate::rng::{FAMILY_AUX, FAMILY_SKETCH, FAMILY_TUNE, FAMILY_VERIFY};
use crate::rois::{RoisIndicatorSource, RoisModel, SketchStore};

pub const ONE_MINUS_INV_E: f64 = 1.0 - 1.0 / std::f64::consts::E;

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyResult {
    pub seed_set: SeedSet,
    /// Selection order.
    pub order: Vec<NodeId>,
    pub estimate: f64,
    /// Samples covered by the seed set.
    pub coverage: u64,
    /// `max(bound_s, 1 - 1/e)`.
    pub bound: f64,
    pub bound_s: f64,
    /// The `k` largest residual marginals outside the seed set.
    pub top_marginals: Vec<(NodeId, f64)>,
    pub top_gain_sum: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    gain: f64,
    node: u32,
    round: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Coverage<'s> {
    store: &'s SketchStore,
    covered: Vec<bool>,
    count: u64,
    scale: f64,
}

impl<'s> Coverage<'s> {
    fn new(store: &'s SketchStore) -> Self {
        Coverage {
            store,
            covered: vec![false; store.len()],
            count: 0,
            scale: store.scale(),
        }
    }

    fn gain(&self, v: NodeId) -> f64 {
        let fresh = self
            .store
            .containing(v)
            .iter()
            .filter(|&&j| !self.covered[j as usize])
            .count();
        fresh as f64 * self.scale + (1.0 - self.store.gamma().gamma[v.index()])
    }

    fn add(&mut self, v: NodeId) {
        for &j in self.store.containing(v) {
            if !self.covered[j as usize] {
                self.covered[j as usize] = true;
                self.count += 1;
            }
        }
    }
}

/// Greedy seed selection maximizing the sketch estimate, with lazy
/// re-evaluation of stale marginal gains. Ties go to the lowest id.
pub fn greedy_with_bound(store: &SketchStore, k: usize) -> Result<GreedyResult> {
    if k == 0 {
        return domain("k must be at least 1");
    }
    let n = store.node_count();
    let k_eff = k.min(n);
    let mut cov = Coverage::new(store);
    let mut heap: BinaryHeap<Entry> = (0..n as u32)
        .map(|v| Entry {
            gain: cov.gain(NodeId(v)),
            node: v,
            round: 0,
        })
        .collect();
    let mut order = Vec::with_capacity(k_eff);
    while order.len() < k_eff {
        let top = heap.pop().expect("fewer than n selections");
        if top.round == order.len() {
            cov.add(NodeId(top.node));
            order.push(NodeId(top.node));
        } else {
            heap.push(Entry {
                gain: cov.gain(NodeId(top.node)),
                round: order.len(),
                ..top
            });
        }
    }
    Ok(finish(store, order, cov, k_eff))
}

/// Greedy by full rescans; reference for the lazy version.
pub fn greedy_naive(store: &SketchStore, k: usize) -> Vec<NodeId> {
    let n = store.node_count();
    let mut cov = Coverage::new(store);
    let mut chosen = vec![false; n];
    let mut order = Vec::new();
    for _ in 0..k.min(n) {
        let mut best: Option<(f64, u32)> = None;
        for v in 0..n as u32 {
            if chosen[v as usize] {
                continue;
            }
            let g = cov.gain(NodeId(v));
            if best.is_none_or(|(b, _)| g > b) {
                best = Some((g, v));
            }
        }
        let (_, v) = best.expect("k <= n");
        chosen[v as usize] = true;
        cov.add(NodeId(v));
        order.push(NodeId(v));
    }
    order
}

fn finish(store: &SketchStore, order: Vec<NodeId>, cov: Coverage<'_>, k: usize) -> GreedyResult {
    let n = store.node_count();
    let mut picked = vec![false; n];
    for v in &order {
        picked[v.index()] = true;
    }
    let seed_set = SeedSet::new_unchecked(order.clone());
    let slack = store.gamma().seed_slack(&seed_set);
    let estimate = if store.exact_mode() {
        order.len() as f64
    } else {
        cov.count as f64 * cov.scale + slack
    };
    let mut residual: Vec<Entry> = (0..n as u32)
        .filter(|&v| !picked[v as usize])
        .map(|v| Entry {
            gain: cov.gain(NodeId(v)),
            node: v,
            round: 0,
        })
        .collect();
    residual.sort_by(|a, b| b.cmp(a));
    residual.truncate(k);
    let top_marginals: Vec<(NodeId, f64)> = residual.iter().map(|e| (NodeId(e.node), e.gain)).collect();
    let top_gain_sum: f64 = top_marginals.iter().map(|e| e.1).sum();
    let bound_s = estimate / (estimate + top_gain_sum);
    GreedyResult {
        seed_set,
        order,
        estimate,
        coverage: cov.count,
        bound: bound_s.max(ONE_MINUS_INV_E),
        bound_s,
        top_marginals,
        top_gain_sum,
    }
}

/// `1 + (2 + 2eps/3)(1 + eps) ln(1/delta) / eps^2`.
pub fn verification_threshold(eps2: f64, delta2p: f64) -> f64 {
    1.0 + (2.0 + 2.0 * eps2 / 3.0) * (1.0 + eps2) * (1.0 / delta2p).ln() / (eps2 * eps2)
}

/// Independent estimate of `I(S)` from fresh samples, stopping once
/// `C' + (j / Gamma) sum_{v in S}(1 - gamma_v)` reaches the threshold.
/// `None` if `t_max` samples do not suffice.
pub fn estimate_inf_check(
    model: &RoisModel<'_>,
    s: &SeedSet,
    eps2: f64,
    delta2p: f64,
    t_max: u64,
    block: u32,
    opts: &RunOptions,
) -> Result<Option<f64>> {
    if model.big_gamma() <= 0.0 {
        return domain("graph has no edges; reverse outward samples are undefined");
    }
    if !(eps2 > 0.0 && eps2 < 1.0 && delta2p > 0.0 && delta2p < 1.0) || t_max == 0 {
        return domain("verification needs eps2, delta2' in (0, 1) and t_max >= 1");
    }
    let big_gamma = model.big_gamma();
    let offset = model.gamma.seed_slack(s) / big_gamma;
    let lambda2 = verification_threshold(eps2, delta2p);
    let src = RoisIndicatorSource::hits_with_offset(model, s, offset);
    let mut stream = SampleStream::with_block(&src, opts, FAMILY_VERIFY, block * opts.threads as u32);
    let (count, sum, reached) = stream.draw_until(lambda2, t_max);
    Ok(reached.then(|| big_gamma * sum / count as f64))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionParams {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub rho: f64,
}

impl PrecisionParams {
    /// Even split of an overall `(eps, delta)` budget that meets the
    /// combination constraint with equality.
    pub fn split(eps: f64, delta: f64, rho: f64) -> Result<Self> {
        check_target(eps, delta, rho)?;
        let p = PrecisionParams {
            eps1: eps / 4.0,
            eps2: eps / 4.0,
            eps3: (eps / 2.0 - eps * eps / 16.0) / ONE_MINUS_INV_E,
            delta1: delta / 2.0,
            delta2: delta / 2.0,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    /// `eps1 + eps2 + eps1 eps2 + eps3 (1 - 1/e)`.
    pub fn combined_eps(&self) -> f64 {
        self.eps1 + self.eps2 + self.eps1 * self.eps2 + self.eps3 * ONE_MINUS_INV_E
    }

    pub fn satisfies(&self, eps: f64, delta: f64) -> bool {
        self.combined_eps() <= eps * (1.0 + 1e-12)
            && self.delta1 + self.delta2 <= delta * (1.0 + 1e-12)
            && self.rho <= ONE_MINUS_INV_E - eps + 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !(unit(self.eps2) && unit(self.eps3) && unit(self.delta1) && unit(self.delta2)) {
            return domain(format!("precision parameters out of range: {self:?}"));
        }
        if !(self.eps1 >= 0.0 && self.eps1 < 1.0) || !(self.rho > 0.0 && self.rho < 1.0) {
            return domain(format!("precision parameters out of range: {self:?}"));
        }
        Ok(())
    }
}

fn check_target(eps: f64, delta: f64, rho: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return domain(format!("eps and delta must lie in (0, 1), got {eps}, {delta}"));
    }
    if rho.is_nan() || rho <= 0.0 || rho > ONE_MINUS_INV_E - eps {
        return domain(format!(
            "rho = {rho} must lie in (0, 1 - 1/e - eps = {}]",
            ONE_MINUS_INV_E - eps
        ));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct OutSsaResult {
    pub greedy: GreedyResult,
    /// Whether both stopping conditions held.
    pub converged: bool,
    pub iterations: usize,
    pub samples: usize,
    /// Verification estimate of the final seed set, if any succeeded.
    pub verified: Option<f64>,
    pub eps1_prime: Option<f64>,
    /// `(1 - eps3) bound / (1 + eps1') - eps2` for the returned set.
    pub guarantee: Option<f64>,
}

/// Stop-and-stare maximization: doubles the sketch, runs greedy, verifies
/// the candidate on independent samples, and stops once the verified
/// approximation reaches `rho`.
pub fn out_ssa(g: &ProbabilisticGraph, k: usize, params: &PrecisionParams, opts: &RunOptions) -> Result<OutSsaResult> {
    params.validate()?;
    if k == 0 {
        return domain("k must be at least 1");
    }
    let n = g.node_count();
    let model = RoisModel::new(g);
    if n < 2 || model.big_gamma() <= 0.0 {
        let store = SketchStore::empty(&model, opts.seed, FAMILY_SKETCH);
        return Ok(OutSsaResult {
            greedy: greedy_with_bound(&store, k)?,
            converged: true,
            iterations: 0,
            samples: 0,
            verified: None,
            eps1_prime: None,
            guarantee: None,
        });
    }
    let p = params;
    let log2n = f64::from(log2_nodes(n));
    let lambda = 2.0 * (4.0 * log2n / p.delta1).ln() / (p.eps3 * p.eps3);
    let delta2p = p.delta2 / (4.0 * log2n);
    let rounds = 2 * log2_nodes(n) as usize;

    let mut store = SketchStore::empty(&model, opts.seed, FAMILY_SKETCH);
    let mut last = None;
    for i in 1..=rounds {
        let target = (lambda * f64::powi(2.0, i as i32)).ceil() as usize;
        store.extend_to(&model, target, opts)?;
        let greedy = greedy_with_bound(&store, k)?;
        let t_max = (2.0 * (1.0 + p.eps2) / (1.0 - p.eps2) * (p.eps3 * p.eps3) / (p.eps2 * p.eps2) * store.len() as f64)
            .ceil() as u64;
        let verified = estimate_inf_check(&model, &greedy.seed_set, p.eps2, delta2p, t_max, i as u32, opts)?;
        let mut out = OutSsaResult {
            greedy,
            converged: false,
            iterations: i,
            samples: store.len(),
            verified,
            eps1_prime: None,
            guarantee: None,
        };
        if let Some(ic) = verified {
            let e1 = (out.greedy.estimate / ic - 1.0).max(0.0);
            let nabla = out.greedy.bound;
            out.eps1_prime = Some(e1);
            out.guarantee = Some((1.0 - p.eps3) * nabla / (1.0 + e1) - p.eps2);
            let enough = out.greedy.coverage as f64 >= (1.0 + e1) * (1.0 + p.eps2) * lambda;
            let tight = e1 <= ((1.0 - p.eps3) * nabla - p.rho - p.eps2) / (p.rho + p.eps2);
            if enough && tight {
                out.converged = true;
                return Ok(out);
            }
        }
        last = Some(out);
    }
    Ok(last.expect("at least one round"))
}

#[derive(Clone, Debug)]
pub struct TuneResult {
    pub params: PrecisionParams,
    pub converged: bool,
    pub iterations: usize,
}

/// Picks `(eps1, eps2, eps3)` from two independent sketches of equal size,
/// doubling until the implied guarantee reaches `rho` within the overall
/// `eps` budget.
#[allow(clippy::too_many_arguments)]
pub fn tune_parameters(
    g: &ProbabilisticGraph,
    k: usize,
    eps: f64,
    delta: f64,
    delta1: f64,
    delta2: f64,
    rho: f64,
    opts: &RunOptions,
) -> Result<TuneResult> {
    check_target(eps, delta, rho)?;
    if !(delta1 > 0.0 && delta2 > 0.0) || delta1 + delta2 > delta * (1.0 + 1e-12) {
        return domain(format!(
            "need delta1 + delta2 <= delta, got {delta1} + {delta2} > {delta}"
        ));
    }
    if k == 0 {
        return domain("k must be at least 1");
    }
    let n = g.node_count();
    let model = RoisModel::new(g);
    if model.big_gamma() <= 0.0 {
        return domain("graph has no edges; reverse outward samples are undefined");
    }
    let log2n = f64::from(log2_nodes(n));
    let lambda_p = 2.0 * (4.0 * log2n / delta1).ln() / (eps * eps);
    let rounds = 2 * log2_nodes(n) as usize;
    let mut r = SketchStore::empty(&model, opts.seed, FAMILY_TUNE);
    let mut r2 = SketchStore::empty(&model, opts.seed, FAMILY_AUX);
    let mut last = None;
    for i in 1..=rounds {
        let target = (lambda_p * f64::powi(2.0, i as i32)).ceil() as usize;
        r.extend_to(&model, target, opts)?;
        r2.extend_to(&model, target, opts)?;
        let greedy = greedy_with_bound(&r, k)?;
        let s = &greedy.seed_set;
        let est_r = greedy.estimate;
        let est_r2 = r2.query_influence(s);
        let (c_r, _) = r.query().coverage(s);
        let (c_r2, _) = r2.query().coverage(s);
        let eps1 = (est_r / est_r2 - 1.0).max(0.0);
        let eps2 = if c_r2 > 1 {
            ((2.0 + 2.0 * eps / 3.0) * (1.0 + eps) * (4.0 * log2n / delta2).ln() / (c_r2 - 1) as f64).sqrt()
        } else {
            f64::INFINITY
        };
        let eps3 = if c_r > 0 {
            (2.0 * (4.0 * log2n / delta1).ln() / c_r as f64).sqrt()
        } else {
            f64::INFINITY
        };
        let params = PrecisionParams {
            eps1,
            eps2,
            eps3,
            delta1,
            delta2,
            rho,
        };
        let finite = eps1 < 1.0 && eps2 < 1.0 && eps3 < 1.0;
        let reaches = (1.0 - eps3) * greedy.bound / (1.0 + eps1) - eps2 >= rho;
        if finite && reaches && params.combined_eps() <= eps {
            return Ok(TuneResult {
                params,
                converged: true,
                iterations: i,
            });
        }
        last = Some(TuneResult {
            params,
            converged: false,
            iterations: i,
        });
    }
    Ok(last.expect("at least one round"))
}

#![allow(dead_code)]

use std::collections::BTreeMap;

use outinf_core::{ProbabilisticGraph, RandomStream, SeedSet};

/// u -> v, v -> w, v -> x, every edge 0.1.
pub fn g1() -> ProbabilisticGraph {
    ProbabilisticGraph::from_edges(4, [(0, 1, 0.1), (1, 2, 0.1), (1, 3, 0.1)]).unwrap()
}

#[derive(Clone, Copy, Debug)]
pub enum Weights {
    Wc,
    Constant(f64),
    Random,
}

/// Random directed graph with `2..=max_n` nodes and up to `max_m` distinct
/// edges; weights cycle through weighted cascade, a constant and per-edge
/// uniform draws.
pub fn random_graph(rng: &mut RandomStream, max_n: usize, max_m: usize) -> ProbabilisticGraph {
    let kind = match rng.below(3) {
        0 => Weights::Wc,
        1 => Weights::Constant(0.05 + 0.9 * rng.uniform()),
        _ => Weights::Random,
    };
    random_graph_with(rng, max_n, max_m, kind)
}

pub fn random_graph_with(rng: &mut RandomStream, max_n: usize, max_m: usize, kind: Weights) -> ProbabilisticGraph {
    let n = 2 + rng.below(max_n - 1);
    let mut pairs: Vec<(u32, u32)> = (0..n as u32)
        .flat_map(|u| (0..n as u32).filter(move |&v| v != u).map(move |v| (u, v)))
        .collect();
    for i in (1..pairs.len()).rev() {
        pairs.swap(i, rng.below(i + 1));
    }
    let m = 1 + rng.below(max_m.min(pairs.len()));
    pairs.truncate(m);
    let edges: Vec<(u32, u32, f64)> = pairs
        .into_iter()
        .map(|(u, v)| {
            let w = match kind {
                Weights::Constant(p) => p,
                _ => 0.05 + 0.95 * rng.uniform(),
            };
            (u, v, w)
        })
        .collect();
    let g = ProbabilisticGraph::from_edges(n, edges).unwrap();
    match kind {
        Weights::Wc => g.assign_wc_weights(),
        _ => g,
    }
}

/// Uniform nonempty seed set of size at most `max_k`.
pub fn random_seed_set(rng: &mut RandomStream, g: &ProbabilisticGraph, max_k: usize) -> SeedSet {
    let n = g.node_count();
    let k = 1 + rng.below(max_k.min(n));
    let mut ids: Vec<u32> = (0..n as u32).collect();
    for i in 0..k {
        ids.swap(i, i + rng.below(n - i));
    }
    SeedSet::from_indices(g, &ids[..k]).unwrap()
}

pub fn histogram(values: impl IntoIterator<Item = usize>) -> (BTreeMap<usize, u64>, u64) {
    let mut h = BTreeMap::new();
    let mut total = 0;
    for v in values {
        *h.entry(v).or_insert(0) += 1;
        total += 1;
    }
    (h, total)
}

/// Total variation distance between an empirical histogram and a
/// distribution.
pub fn tv_distance(counts: &BTreeMap<usize, u64>, total: u64, exact: &BTreeMap<usize, f64>) -> f64 {
    let keys: std::collections::BTreeSet<usize> = counts.keys().chain(exact.keys()).copied().collect();
    keys.into_iter()
        .map(|k| {
            let emp = counts.get(&k).copied().unwrap_or(0) as f64 / total as f64;
            (emp - exact.get(&k).copied().unwrap_or(0.0)).abs()
        })
        .sum::<f64>()
        / 2.0
}

/// Standard deviation of a binomial proportion.
pub fn binom_sigma(p: f64, runs: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / runs as f64).sqrt()
}

pub fn mean_var(dist: &BTreeMap<usize, f64>) -> (f64, f64) {
    let mean: f64 = dist.iter().map(|(&k, &p)| k as f64 * p).sum();
    let var: f64 = dist.iter().map(|(&k, &p)| (k as f64 - mean).powi(2) * p).sum();
    (mean, var)
}

//! Cascade samplers: forward IC, importance sampling of non-trivial
//! cascades, and live-edge linear threshold.
//!
//! Samplers own per-worker scratch (an epoch-stamped visited array and a
//! queue) and borrow the graph, so one instance per worker is cheap and
//! resetting between samples is O(1).

use crate::error::{domain, Result};
use crate::graph::{NodeId, ProbabilisticGraph, SeedSet};
use crate::numeric::at_least_one;
use crate::rng::RandomStream;

/// Epoch-stamped visited set.
#[derive(Clone, Debug)]
pub(crate) struct Visited {
    stamp: Vec<u32>,
    epoch: u32,
}

impl Visited {
    pub(crate) fn new(n: usize) -> Self {
        Visited {
            stamp: vec![0; n],
            epoch: 1,
        }
    }

    #[inline]
    pub(crate) fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    #[inline]
    pub(crate) fn contains(&self, i: usize) -> bool {
        self.stamp[i] == self.epoch
    }

    /// Marks `i`; returns `false` if it was already marked.
    #[inline]
    pub(crate) fn insert(&mut self, i: usize) -> bool {
        if self.stamp[i] == self.epoch {
            false
        } else {
            self.stamp[i] = self.epoch;
            true
        }
    }
}

/// Inverse-CDF table where every index at or after the last positive-mass
/// bucket reads exactly 1.0, so a uniform in `[0, 1)` always lands.
pub(crate) fn cdf_from_masses(masses: &[f64], total: f64) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for &p in masses {
        acc += p / total;
        cdf.push(acc);
    }
    if let Some(last) = masses.iter().rposition(|&p| p > 0.0) {
        cdf[last..].iter_mut().for_each(|c| *c = 1.0);
    }
    cdf
}

/// Number of entries `<= u` in a nondecreasing table.
#[inline]
pub(crate) fn pick(cdf: &[f64], u: f64) -> usize {
    if cdf.len() <= 16 {
        cdf.iter().map(|&c| (c <= u) as usize).sum()
    } else {
        cdf.partition_point(|&c| c <= u)
    }
}

/// Calls `f` on every neighbor whose edge turns out live. A single uniform
/// decides both whether any edge is live and which one is first; the
/// edges after the first are then flipped independently.
#[inline]
pub(crate) fn for_live<'e>(
    any: f64,
    edges: impl FnOnce() -> (&'e [NodeId], &'e [f64], &'e [f64]),
    rng: &mut RandomStream,
    mut f: impl FnMut(NodeId),
) {
    let r = rng.uniform();
    if r >= any {
        return;
    }
    let (nodes, weights, cum) = edges();
    let first = pick(cum, r);
    f(nodes[first]);
    for t in first + 1..nodes.len() {
        if rng.uniform() < weights[t] {
            f(nodes[t]);
        }
    }
}

/// Calls `f` on every live index in `start..p.len()`, where index `t` is
/// live with probability `p[t]` and `suffix_any[t]` is the probability that
/// some index at or after `t` is live. Draws one uniform per live index plus
/// one to finish.
#[inline]
fn live_after(p: &[f64], suffix_any: &[f64], start: usize, rng: &mut RandomStream, mut f: impl FnMut(usize)) {
    let mut i = start;
    while i < p.len() {
        let r = rng.uniform();
        if r >= suffix_any[i] {
            return;
        }
        let mut acc = 0.0;
        let mut j = i;
        loop {
            acc += p[j] * (1.0 - acc);
            if r < acc || j + 1 == p.len() {
                break;
            }
            j += 1;
        }
        f(j);
        i = j + 1;
    }
}

/// The out-neighborhood of a seed set with the probabilities needed to
/// sample only non-trivial cascades.
#[derive(Clone, Debug)]
pub struct SeedNeighborhood {
    pub seeds: SeedSet,
    /// `N_out(S) \ S` in ascending id order.
    pub ordered_neighbors: Vec<NodeId>,
    /// Probability that `S` directly activates each neighbor.
    pub p_sv: Vec<f64>,
    /// `a_probs[i]` is the probability that neighbor `i` is the first one
    /// activated; the last entry is the probability that none is.
    pub a_probs: Vec<f64>,
    /// Probability that the cascade is non-trivial.
    pub beta0: f64,
    cdf: Vec<f64>,
    suffix_any: Vec<f64>,
    in_seed: Vec<bool>,
}

pub fn build_neighborhood(g: &ProbabilisticGraph, s: &SeedSet) -> SeedNeighborhood {
    let n = g.node_count();
    let in_seed = s.mask(n);
    let mut edges: Vec<(NodeId, f64)> = s
        .nodes()
        .iter()
        .flat_map(|&u| {
            let (vs, ws) = g.out_edges(u);
            vs.iter().copied().zip(ws.iter().copied())
        })
        .filter(|(v, _)| !in_seed[v.index()])
        .collect();
    edges.sort_by_key(|e| e.0);

    let mut ordered_neighbors = Vec::new();
    let mut p_sv = Vec::new();
    let mut i = 0;
    while i < edges.len() {
        let v = edges[i].0;
        let j = i + edges[i..].iter().take_while(|e| e.0 == v).count();
        let group = &edges[i..j];
        let ws: Vec<f64> = group.iter().map(|e| e.1).collect();
        let p = at_least_one(&ws);
        ordered_neighbors.push(v);
        p_sv.push(p);
        i = j;
    }

    let mut a_probs = Vec::with_capacity(p_sv.len() + 1);
    let mut none = 1.0;
    let mut log_none = 0.0;
    for &p in &p_sv {
        a_probs.push(p * none);
        none *= 1.0 - p;
        log_none += (-p).ln_1p();
    }
    let beta0 = -log_none.exp_m1();
    a_probs.push(log_none.exp());
    let cdf = if beta0 > 0.0 {
        cdf_from_masses(&a_probs[..p_sv.len()], beta0)
    } else {
        Vec::new()
    };
    let mut suffix_any = vec![0.0; p_sv.len() + 1];
    for i in (0..p_sv.len()).rev() {
        suffix_any[i] = p_sv[i] + (1.0 - p_sv[i]) * suffix_any[i + 1];
    }
    SeedNeighborhood {
        seeds: s.clone(),
        suffix_any,
        ordered_neighbors,
        p_sv,
        a_probs,
        beta0,
        cdf,
        in_seed,
    }
}

/// Importance sampler for the outer size `Y` of a non-trivial cascade.
pub struct IicpSampler<'a> {
    g: &'a ProbabilisticGraph,
    nb: &'a SeedNeighborhood,
    visited: Visited,
    queue: Vec<NodeId>,
}

impl<'a> IicpSampler<'a> {
    pub fn new(g: &'a ProbabilisticGraph, nb: &'a SeedNeighborhood) -> Result<Self> {
        if nb.beta0 <= 0.0 {
            return domain("seed set has no outgoing influence (beta0 = 0); nothing to sample");
        }
        Ok(IicpSampler {
            g,
            nb,
            visited: Visited::new(g.node_count()),
            queue: Vec::new(),
        })
    }

    /// Number of nodes outside `S` activated by one non-trivial cascade.
    pub fn sample(&mut self, rng: &mut RandomStream) -> usize {
        let nb = self.nb;
        self.visited.reset();
        self.queue.clear();

        let first = pick(&nb.cdf, rng.uniform());
        let v = nb.ordered_neighbors[first];
        self.visited.insert(v.index());
        self.queue.push(v);
        let (visited, queue) = (&mut self.visited, &mut self.queue);
        live_after(&nb.p_sv, &nb.suffix_any, first + 1, rng, |j| {
            let v = nb.ordered_neighbors[j];
            visited.insert(v.index());
            queue.push(v);
        });

        let g = self.g;
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            let (visited, queue) = (&mut self.visited, &mut self.queue);
            let edges = || {
                let (vs, ws) = g.out_edges(u);
                (vs, ws, g.out_cum(u))
            };
            for_live(g.out_any(u), edges, rng, |v| {
                if !nb.in_seed[v.index()] && visited.insert(v.index()) {
                    queue.push(v);
                }
            });
        }
        self.queue.len()
    }
}

/// Plain forward live-edge cascade under IC.
pub struct ForwardIcSampler<'a> {
    g: &'a ProbabilisticGraph,
    seeds: &'a SeedSet,
    visited: Visited,
    queue: Vec<NodeId>,
}

impl<'a> ForwardIcSampler<'a> {
    pub fn new(g: &'a ProbabilisticGraph, seeds: &'a SeedSet) -> Self {
        ForwardIcSampler {
            g,
            seeds,
            visited: Visited::new(g.node_count()),
            queue: Vec::new(),
        }
    }

    /// Total number of active nodes, seeds included.
    pub fn sample(&mut self, rng: &mut RandomStream) -> usize {
        self.visited.reset();
        self.queue.clear();
        for &u in self.seeds.nodes() {
            self.visited.insert(u.index());
            self.queue.push(u);
        }
        let g = self.g;
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            let (visited, queue) = (&mut self.visited, &mut self.queue);
            let edges = || {
                let (vs, ws) = g.out_edges(u);
                (vs, ws, g.out_cum(u))
            };
            for_live(g.out_any(u), edges, rng, |v| {
                if visited.insert(v.index()) {
                    queue.push(v);
                }
            });
        }
        self.queue.len()
    }
}

/// Linear threshold cascades via live-edge selection: each node keeps at
/// most one in-edge, chosen with probability equal to its weight. Choices
/// are drawn lazily the first time the cascade reaches a node's in-list.
pub struct LtSampler<'a> {
    g: &'a ProbabilisticGraph,
    seeds: &'a SeedSet,
    visited: Visited,
    chosen: Visited,
    choice: Vec<u32>,
    queue: Vec<NodeId>,
}

impl<'a> LtSampler<'a> {
    pub fn new(g: &'a ProbabilisticGraph, seeds: &'a SeedSet) -> Result<Self> {
        g.check_lt_weights()?;
        let n = g.node_count();
        Ok(LtSampler {
            g,
            seeds,
            visited: Visited::new(n),
            chosen: Visited::new(n),
            choice: vec![0; n],
            queue: Vec::new(),
        })
    }

    /// Index into `v`'s in-list of the selected edge, or `u32::MAX` for none.
    fn choose(&mut self, v: NodeId, rng: &mut RandomStream) -> u32 {
        if self.chosen.insert(v.index()) {
            let r = rng.uniform();
            let ws = self.g.in_edges(v).1;
            let mut acc = 0.0;
            let mut pick = u32::MAX;
            for (i, &w) in ws.iter().enumerate() {
                acc += w;
                if r < acc {
                    pick = i as u32;
                    break;
                }
            }
            self.choice[v.index()] = pick;
        }
        self.choice[v.index()]
    }

    pub fn sample(&mut self, rng: &mut RandomStream) -> usize {
        self.visited.reset();
        self.chosen.reset();
        self.queue.clear();
        for &u in self.seeds.nodes() {
            self.visited.insert(u.index());
            self.queue.push(u);
        }
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            let g = self.g;
            for &v in g.out_edges(u).0 {
                if self.visited.contains(v.index()) {
                    continue;
                }
                let c = self.choose(v, rng);
                if c != u32::MAX && g.in_edges(v).0[c as usize] == u {
                    self.visited.insert(v.index());
                    self.queue.push(v);
                }
            }
        }
        self.queue.len()
    }
}

//! Exhaustive ground truth for tiny graphs.
//!
//! Every quantity here is computed by enumerating all live-edge worlds (or,
//! for the linear threshold model, all per-node in-edge choices) and
//! weighting each by its probability. Sums are compensated and chunked in a
//! fixed layout, so results do not depend on the thread count.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::graph::{NodeId, ProbabilisticGraph, SeedSet};
use crate::numeric::{at_least_one, CompensatedSum};

pub const MAX_ENUM_EDGES: usize = 20;
pub const MAX_BRUTE_NODES: usize = 12;
pub const MAX_BRUTE_EDGES: usize = 16;
pub const MAX_LT_CONFIGS: u64 = 1 << 20;

const CHUNK_BITS: u32 = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactReport {
    pub influence: f64,
    pub outward: f64,
    pub beta0: f64,
    /// Distribution of the cascade size `M`.
    pub cascade_size_dist: BTreeMap<usize, f64>,
    /// Distribution of the outer size `Y` conditioned on `M > |S|`.
    pub outer_size_dist: BTreeMap<usize, f64>,
}

/// One live-edge world: `live[e]` for every edge in CSR out order.
struct World<'a> {
    live: &'a [bool],
    prob: f64,
}

struct EdgeTable {
    src: Vec<usize>,
    dst: Vec<usize>,
    w: Vec<f64>,
    /// Out-edge ids per node.
    out: Vec<Vec<usize>>,
    /// In-edge ids per node.
    inc: Vec<Vec<usize>>,
}

impl EdgeTable {
    fn new(g: &ProbabilisticGraph) -> Self {
        let n = g.node_count();
        let mut t = EdgeTable {
            src: Vec::new(),
            dst: Vec::new(),
            w: Vec::new(),
            out: vec![Vec::new(); n],
            inc: vec![Vec::new(); n],
        };
        for (e, (u, v, w)) in g.edges().enumerate() {
            t.src.push(u.index());
            t.dst.push(v.index());
            t.w.push(w);
            t.out[u.index()].push(e);
            t.inc[v.index()].push(e);
        }
        t
    }

    fn m(&self) -> usize {
        self.w.len()
    }
}

fn check_enumerable(g: &ProbabilisticGraph) -> Result<()> {
    if g.edge_count() > MAX_ENUM_EDGES {
        return Err(Error::Capacity(format!(
            "exact enumeration supports at most {MAX_ENUM_EDGES} edges, graph has {}",
            g.edge_count()
        )));
    }
    Ok(())
}

/// Enumerates all `2^m` worlds, calling `visit` with a per-chunk accumulator
/// of `width` compensated sums. Chunks are merged in index order.
fn sum_over_worlds<F>(t: &EdgeTable, width: usize, visit: F) -> Vec<f64>
where
    F: Fn(&World<'_>, &mut [CompensatedSum]) + Sync,
{
    let m = t.m();
    let total: u64 = 1 << m;
    let chunk_bits = CHUNK_BITS.min(m as u32);
    let chunks = total >> chunk_bits;
    let partials: Vec<Vec<CompensatedSum>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![CompensatedSum::new(); width];
            let mut live = vec![false; m];
            for mask in (c << chunk_bits)..((c + 1) << chunk_bits) {
                let mut prob = 1.0;
                for (e, l) in live.iter_mut().enumerate() {
                    *l = mask >> e & 1 == 1;
                    prob *= if *l { t.w[e] } else { 1.0 - t.w[e] };
                }
                if prob > 0.0 {
                    visit(&World { live: &live, prob }, &mut acc);
                }
            }
            acc
        })
        .collect();
    let mut total_acc = vec![CompensatedSum::new(); width];
    for part in &partials {
        for (a, p) in total_acc.iter_mut().zip(part) {
            a.merge(p);
        }
    }
    total_acc.iter().map(CompensatedSum::value).collect()
}

fn forward_reach(t: &EdgeTable, live: &[bool], seeds: &[NodeId], seen: &mut [bool]) -> usize {
    seen.iter_mut().for_each(|s| *s = false);
    let mut queue: VecDeque<usize> = seeds.iter().map(|u| u.index()).collect();
    for &u in &queue {
        seen[u] = true;
    }
    let mut count = queue.len();
    while let Some(u) = queue.pop_front() {
        for &e in &t.out[u] {
            let v = t.dst[e];
            if live[e] && !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count
}

fn reverse_reach(t: &EdgeTable, live: &[bool], root: usize, seen: &mut [bool]) {
    seen.iter_mut().for_each(|s| *s = false);
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &e in &t.inc[v] {
            let u = t.src[e];
            if live[e] && !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
}

/// Full enumeration report for seed set `s`.
pub fn exact_distributions(g: &ProbabilisticGraph, s: &SeedSet) -> Result<ExactReport> {
    check_enumerable(g)?;
    let n = g.node_count();
    let t = EdgeTable::new(g);
    let sums = sum_over_worlds(&t, n + 1, |world, acc| {
        let mut seen = vec![false; n];
        let size = forward_reach(&t, world.live, s.nodes(), &mut seen);
        acc[size].add(world.prob);
    });
    Ok(report_from_sizes(&sums, s.len()))
}

fn report_from_sizes(sums: &[f64], k: usize) -> ExactReport {
    let cascade_size_dist: BTreeMap<usize, f64> = sums
        .iter()
        .enumerate()
        .filter(|&(size, &p)| size >= k && p > 0.0)
        .map(|(size, &p)| (size, p))
        .collect();
    let beta0: f64 = cascade_size_dist
        .iter()
        .filter(|&(&size, _)| size > k)
        .map(|(_, &p)| p)
        .collect::<CompensatedSum>()
        .value();
    let outward = cascade_size_dist
        .iter()
        .map(|(&size, &p)| (size - k) as f64 * p)
        .collect::<CompensatedSum>()
        .value();
    let outer_size_dist = if beta0 > 0.0 {
        cascade_size_dist
            .iter()
            .filter(|&(&size, _)| size > k)
            .map(|(&size, &p)| (size - k, p / beta0))
            .collect()
    } else {
        BTreeMap::new()
    };
    ExactReport {
        influence: outward + k as f64,
        outward,
        beta0,
        cascade_size_dist,
        outer_size_dist,
    }
}

/// Expected cascade size `I(S)`.
pub fn exact_influence(g: &ProbabilisticGraph, s: &SeedSet) -> Result<f64> {
    Ok(exact_distributions(g, s)?.influence)
}

/// Expected number of activated nodes outside `S`.
pub fn exact_outward(g: &ProbabilisticGraph, s: &SeedSet) -> Result<f64> {
    Ok(exact_distributions(g, s)?.outward)
}

/// `(Pr[R ∩ S ≠ ∅], Pr[R ∩ S ≠ ∅ and src(R) ∉ S])` for a reverse outward
/// sample `R`, by enumerating worlds and sources.
pub fn exact_rois_hit(g: &ProbabilisticGraph, s: &SeedSet) -> Result<(f64, f64)> {
    check_enumerable(g)?;
    let n = g.node_count();
    let t = EdgeTable::new(g);
    let big_gamma: f64 = g
        .nodes()
        .map(|v| at_least_one(g.in_edges(v).1))
        .collect::<CompensatedSum>()
        .value();
    if big_gamma <= 0.0 {
        return domain("graph has no edges; reverse outward samples are undefined");
    }
    let in_s = s.mask(n);
    let sums = sum_over_worlds(&t, 2, |world, acc| {
        let mut seen = vec![false; n];
        for v in 0..n {
            if !t.inc[v].iter().any(|&e| world.live[e]) {
                continue;
            }
            reverse_reach(&t, world.live, v, &mut seen);
            if (0..n).any(|u| seen[u] && in_s[u]) {
                acc[0].add(world.prob);
                if !in_s[v] {
                    acc[1].add(world.prob);
                }
            }
        }
    });
    Ok((sums[0] / big_gamma, sums[1] / big_gamma))
}

/// Optimal seed set of size at most `k` by exhaustive search, ties broken
/// toward the lexicographically smallest set.
pub fn brute_force_opt(g: &ProbabilisticGraph, k: usize) -> Result<(SeedSet, f64)> {
    let n = g.node_count();
    if n > MAX_BRUTE_NODES || g.edge_count() > MAX_BRUTE_EDGES {
        return Err(Error::Capacity(format!(
            "brute force supports n <= {MAX_BRUTE_NODES} and m <= {MAX_BRUTE_EDGES}, got n = {n}, m = {}",
            g.edge_count()
        )));
    }
    if k == 0 {
        return domain("k must be at least 1");
    }
    let k = k.min(n);
    let t = EdgeTable::new(g);
    let m = t.m();

    // reach[world * n + u] = bitmask of nodes reachable from u
    let worlds = 1usize << m;
    let mut reach = vec![0u32; worlds * n];
    let mut probs = vec![0.0; worlds];
    let mut live = vec![false; m];
    let mut seen = vec![false; n];
    for mask in 0..worlds {
        let mut prob = 1.0;
        for (e, l) in live.iter_mut().enumerate() {
            *l = mask >> e & 1 == 1;
            prob *= if *l { t.w[e] } else { 1.0 - t.w[e] };
        }
        probs[mask] = prob;
        for u in 0..n {
            forward_reach(&t, &live, &[NodeId(u as u32)], &mut seen);
            reach[mask * n + u] = (0..n).filter(|&x| seen[x]).fold(0, |b, x| b | 1 << x);
        }
    }

    let value = |set: &[usize]| -> f64 {
        let mut acc = CompensatedSum::new();
        for w in 0..worlds {
            let bits = set.iter().fold(0u32, |b, &u| b | reach[w * n + u]);
            acc.add(probs[w] * f64::from(bits.count_ones()));
        }
        acc.value()
    };

    let mut best: Option<(Vec<usize>, f64)> = None;
    for size in 1..=k {
        for combo in Combinations::new(n, size) {
            let val = value(&combo);
            let better = match &best {
                None => true,
                Some((set, b)) => val > b + 1e-12 || ((val - b).abs() <= 1e-12 && combo < *set),
            };
            if better {
                best = Some((combo, val));
            }
        }
    }
    let (set, val) = best.expect("k >= 1 and n >= 1");
    Ok((
        SeedSet::from_indices(g, &set.iter().map(|&u| u as u32).collect::<Vec<_>>())?,
        val,
    ))
}

/// Lexicographic `size`-subsets of `0..n`.
struct Combinations {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, size: usize) -> Self {
        Combinations {
            n,
            cur: (0..size).collect(),
            done: size > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let k = self.cur.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.cur[i] < self.n - k + i {
                self.cur[i] += 1;
                for j in i + 1..k {
                    self.cur[j] = self.cur[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Cascade-size distribution under the linear threshold model, by
/// enumerating each node's choice of at most one live in-edge.
pub fn exact_lt_distribution(g: &ProbabilisticGraph, s: &SeedSet) -> Result<ExactReport> {
    g.check_lt_weights()?;
    let n = g.node_count();
    let mut configs: u64 = 1;
    for v in g.nodes() {
        configs = configs.saturating_mul(g.in_degree(v) as u64 + 1);
        if configs > MAX_LT_CONFIGS {
            return Err(Error::Capacity(format!(
                "linear threshold enumeration exceeds {MAX_LT_CONFIGS} configurations"
            )));
        }
    }
    let in_lists: Vec<(Vec<NodeId>, Vec<f64>)> = g
        .nodes()
        .map(|v| {
            let (us, ws) = g.in_edges(v);
            (us.to_vec(), ws.to_vec())
        })
        .collect();
    let out_adj: Vec<&[NodeId]> = g.nodes().map(|u| g.out_edges(u).0).collect();

    let mut sums = vec![CompensatedSum::new(); n + 1];
    // choice[v] = d_in(v) means "no in-edge"
    let mut choice: Vec<usize> = vec![0; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for _ in 0..configs {
        let mut prob = 1.0;
        for v in 0..n {
            let (_, ws) = &in_lists[v];
            prob *= if choice[v] < ws.len() {
                ws[choice[v]]
            } else {
                (1.0 - ws.iter().sum::<f64>()).max(0.0)
            };
        }
        if prob > 0.0 {
            seen.iter_mut().for_each(|x| *x = false);
            queue.clear();
            for u in s.nodes() {
                seen[u.index()] = true;
                queue.push_back(u.index());
            }
            let mut size = s.len();
            while let Some(u) = queue.pop_front() {
                for &v in out_adj[u] {
                    let v = v.index();
                    let (us, _) = &in_lists[v];
                    if !seen[v] && choice[v] < us.len() && us[choice[v]].index() == u {
                        seen[v] = true;
                        size += 1;
                        queue.push_back(v);
                    }
                }
            }
            sums[size].add(prob);
        }
        // odometer increment
        for v in 0..n {
            choice[v] += 1;
            if choice[v] <= in_lists[v].0.len() {
                break;
            }
            choice[v] = 0;
        }
    }
    let sums: Vec<f64> = sums.iter().map(CompensatedSum::value).collect();
    Ok(report_from_sizes(&sums, s.len()))
}

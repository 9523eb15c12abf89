//! Reverse outward influence samples and the sketch oracle built on them.
//!
//! A sample picks a source `v` with probability proportional to
//! `gamma_v = Pr[v has a live in-edge]`, conditions on at least one live
//! in-edge, and grows the reverse reachable set from there. Every sample
//! therefore holds at least two nodes.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::graph::{NodeId, ProbabilisticGraph, SeedSet};
use crate::mean::{gsra, BoundedSource, Draw, EstimationResult, RunOptions};
use crate::numeric::{at_least_one, CompensatedSum};
use crate::rng::{RandomStream, FAMILY_SKETCH};
use crate::sampler::{cdf_from_masses, for_live, pick, Visited};

/// Samples per generation block; each block has its own random stream.
pub const BLOCK: usize = 1024;

#[derive(Clone, Debug)]
pub struct GammaTable {
    pub gamma: Vec<f64>,
    pub big_gamma: f64,
    source_nodes: Vec<NodeId>,
    source_cdf: Vec<f64>,
}

impl GammaTable {
    pub fn from_gamma(gamma: Vec<f64>) -> Self {
        let big_gamma = gamma.iter().copied().collect::<CompensatedSum>().value();
        let source_nodes: Vec<NodeId> = (0..gamma.len() as u32)
            .map(NodeId)
            .filter(|v| gamma[v.index()] > 0.0)
            .collect();
        let masses: Vec<f64> = source_nodes.iter().map(|v| gamma[v.index()]).collect();
        let source_cdf = if big_gamma > 0.0 {
            cdf_from_masses(&masses, big_gamma)
        } else {
            Vec::new()
        };
        GammaTable {
            gamma,
            big_gamma,
            source_nodes,
            source_cdf,
        }
    }

    /// `sum_{v in S} (1 - gamma_v)`.
    pub fn seed_slack(&self, s: &SeedSet) -> f64 {
        s.nodes().iter().map(|v| 1.0 - self.gamma[v.index()]).sum()
    }

    #[inline]
    fn draw_source(&self, rng: &mut RandomStream) -> NodeId {
        self.source_nodes[pick(&self.source_cdf, rng.uniform())]
    }
}

pub fn build_gamma(g: &ProbabilisticGraph) -> GammaTable {
    GammaTable::from_gamma(g.nodes().map(|v| at_least_one(g.in_edges(v).1)).collect())
}

/// Gamma table plus, for every node, the CDF over which in-neighbor is the
/// first live one given that at least one is.
#[derive(Clone, Debug)]
pub struct RoisModel<'g> {
    pub g: &'g ProbabilisticGraph,
    pub gamma: GammaTable,
    first_cdf: Vec<f64>,
}

impl<'g> RoisModel<'g> {
    pub fn new(g: &'g ProbabilisticGraph) -> Self {
        let gamma = build_gamma(g);
        let mut first_cdf = Vec::with_capacity(g.edge_count());
        for v in g.nodes() {
            let ws = g.in_edges(v).1;
            let mut none = 1.0;
            let masses: Vec<f64> = ws
                .iter()
                .map(|&w| {
                    let p = w * none;
                    none *= 1.0 - w;
                    p
                })
                .collect();
            let gv = gamma.gamma[v.index()];
            if gv > 0.0 {
                first_cdf.extend(cdf_from_masses(&masses, gv));
            } else {
                first_cdf.extend(std::iter::repeat_n(1.0, ws.len()));
            }
        }
        RoisModel { g, gamma, first_cdf }
    }

    pub fn big_gamma(&self) -> f64 {
        self.gamma.big_gamma
    }

    pub fn sampler(&self) -> Result<RoisSampler<'_, 'g>> {
        if self.gamma.big_gamma <= 0.0 {
            return domain("graph has no edges; reverse outward samples are undefined");
        }
        Ok(RoisSampler {
            model: self,
            visited: Visited::new(self.g.node_count()),
            queue: Vec::new(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoisSample {
    pub source: NodeId,
    /// Sorted, includes the source.
    pub nodes: Vec<NodeId>,
}

pub struct RoisSampler<'m, 'g> {
    model: &'m RoisModel<'g>,
    visited: Visited,
    queue: Vec<NodeId>,
}

impl RoisSampler<'_, '_> {
    /// Draws one sample into `out` (unsorted, source first) and returns the
    /// source.
    pub fn sample_into(&mut self, rng: &mut RandomStream, out: &mut Vec<NodeId>) -> NodeId {
        let model = self.model;
        let g = model.g;
        self.visited.reset();
        self.queue.clear();
        out.clear();

        let v = model.gamma.draw_source(rng);
        self.visited.insert(v.index());
        out.push(v);

        let base = g.in_offset(v);
        let (us, ws) = g.in_edges(v);
        let cdf = &model.first_cdf[base..base + us.len()];
        let first = pick(cdf, rng.uniform());
        self.visited.insert(us[first].index());
        self.queue.push(us[first]);
        for t in first + 1..us.len() {
            if rng.uniform() < ws[t] {
                self.visited.insert(us[t].index());
                self.queue.push(us[t]);
            }
        }

        let mut head = 0;
        while head < self.queue.len() {
            let x = self.queue[head];
            head += 1;
            let (visited, queue) = (&mut self.visited, &mut self.queue);
            let edges = || {
                let (us, ws) = g.in_edges(x);
                (us, ws, g.in_cum(x))
            };
            for_live(g.in_any(x), edges, rng, |u| {
                if visited.insert(u.index()) {
                    queue.push(u);
                }
            });
        }
        out.extend_from_slice(&self.queue);
        v
    }

    pub fn sample(&mut self, rng: &mut RandomStream) -> RoisSample {
        let mut nodes = Vec::new();
        let source = self.sample_into(rng, &mut nodes);
        nodes.sort_unstable();
        RoisSample { source, nodes }
    }
}

/// A collection of reverse outward samples with an inverted node index.
#[derive(Clone, Debug)]
pub struct SketchStore {
    n: usize,
    gamma: GammaTable,
    sources: Vec<u32>,
    offsets: Vec<u64>,
    members: Vec<u32>,
    inv_offsets: Vec<u64>,
    inv_samples: Vec<u32>,
    seed: u64,
    family: u32,
}

fn generate_block(
    model: &RoisModel<'_>,
    seed: u64,
    family: u32,
    block: usize,
    skip: usize,
    take: usize,
) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
    let mut sampler = model.sampler().expect("gamma > 0 checked by caller");
    let mut rng = RandomStream::for_family(seed, family, block as u32);
    let mut sources = Vec::with_capacity(take);
    let mut lens = Vec::with_capacity(take);
    let mut members = Vec::new();
    let mut buf = Vec::new();
    for i in 0..skip + take {
        let src = sampler.sample_into(&mut rng, &mut buf);
        if i < skip {
            continue;
        }
        buf.sort_unstable();
        sources.push(src.0);
        lens.push(buf.len() as u32);
        members.extend(buf.iter().map(|u| u.0));
    }
    (sources, lens, members)
}

impl SketchStore {
    /// Empty store bound to a graph's gamma table and a stream family.
    pub fn empty(model: &RoisModel<'_>, seed: u64, family: u32) -> Self {
        SketchStore {
            n: model.g.node_count(),
            gamma: model.gamma.clone(),
            sources: Vec::new(),
            offsets: vec![0],
            members: Vec::new(),
            inv_offsets: vec![0; model.g.node_count() + 1],
            inv_samples: Vec::new(),
            seed,
            family,
        }
    }

    /// Builds `t` samples from the sketch stream family.
    pub fn build(model: &RoisModel<'_>, t: usize, opts: &RunOptions) -> Result<Self> {
        if t == 0 {
            return domain("sketch needs at least one sample");
        }
        let mut store = SketchStore::empty(model, opts.seed, FAMILY_SKETCH);
        store.extend_to(model, t, opts)?;
        Ok(store)
    }

    /// Appends samples until the store holds `t`. Sample `j` is always the
    /// same for a given seed and family, so growth preserves the prefix.
    pub fn extend_to(&mut self, model: &RoisModel<'_>, t: usize, opts: &RunOptions) -> Result<()> {
        if self.exact_mode() || t <= self.len() {
            return Ok(());
        }
        if t > u32::MAX as usize {
            return Err(Error::Capacity(format!("{t} samples exceed the 32-bit sample index")));
        }
        let start = self.len();
        let first_block = start / BLOCK;
        let last_block = t.div_ceil(BLOCK);
        let (seed, family) = (self.seed, self.family);
        let blocks: Vec<_> = opts.install(|| {
            (first_block..last_block)
                .into_par_iter()
                .map(|b| {
                    let lo = (b * BLOCK).max(start);
                    let hi = ((b + 1) * BLOCK).min(t);
                    generate_block(model, seed, family, b, lo - b * BLOCK, hi - lo)
                })
                .collect()
        });
        for (sources, lens, members) in blocks {
            self.sources.extend(sources);
            for len in lens {
                let last = *self.offsets.last().unwrap();
                self.offsets.push(last + u64::from(len));
            }
            self.members.extend(members);
            if let Some(limit) = opts.memory_limit {
                if self.memory_bytes() > limit {
                    return Err(Error::Capacity(format!(
                        "sketch needs more than the {limit}-byte memory limit"
                    )));
                }
            }
        }
        self.rebuild_index();
        Ok(())
    }

    fn memory_bytes(&self) -> usize {
        8 * self.offsets.len() + 4 * self.sources.len() + 8 * self.members.len()
    }

    fn rebuild_index(&mut self) {
        let mut counts = vec![0u64; self.n + 1];
        for &u in &self.members {
            counts[u as usize + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut inv = vec![0u32; self.members.len()];
        for j in 0..self.sources.len() {
            for &u in self.sample_nodes(j) {
                inv[cursor[u as usize] as usize] = j as u32;
                cursor[u as usize] += 1;
            }
        }
        self.inv_offsets = counts;
        self.inv_samples = inv;
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Stores over edgeless graphs answer every query analytically.
    pub fn exact_mode(&self) -> bool {
        self.gamma.big_gamma <= 0.0
    }

    pub fn gamma(&self) -> &GammaTable {
        &self.gamma
    }

    pub fn big_gamma(&self) -> f64 {
        self.gamma.big_gamma
    }

    pub fn sample_nodes(&self, j: usize) -> &[u32] {
        &self.members[self.offsets[j] as usize..self.offsets[j + 1] as usize]
    }

    pub fn sample(&self, j: usize) -> RoisSample {
        RoisSample {
            source: NodeId(self.sources[j]),
            nodes: self.sample_nodes(j).iter().map(|&u| NodeId(u)).collect(),
        }
    }

    pub fn source(&self, j: usize) -> NodeId {
        NodeId(self.sources[j])
    }

    /// Sample indices containing `u`, ascending.
    pub fn containing(&self, u: NodeId) -> &[u32] {
        let i = u.index();
        &self.inv_samples[self.inv_offsets[i] as usize..self.inv_offsets[i + 1] as usize]
    }

    /// `Gamma / |R|`, the weight of one covered sample.
    pub fn scale(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.gamma.big_gamma / self.len() as f64
        }
    }

    pub fn query(&self) -> SketchQuery<'_> {
        SketchQuery {
            store: self,
            seen: Visited::new(self.len()),
        }
    }

    pub fn query_influence(&self, s: &SeedSet) -> f64 {
        self.query().influence(s)
    }

    pub fn query_outward(&self, s: &SeedSet) -> f64 {
        self.query().outward(s)
    }

    /// Binary container: magic, node count, sample count, gamma array, then
    /// per sample its source, length and sorted members.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for &gv in &self.gamma.gamma {
            w.write_all(&gv.to_le_bytes())?;
        }
        for j in 0..self.len() {
            let nodes = self.sample_nodes(j);
            w.write_all(&self.sources[j].to_le_bytes())?;
            w.write_all(&(nodes.len() as u32).to_le_bytes())?;
            for &u in nodes {
                w.write_all(&u.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let n = read_u64(&mut r)? as usize;
        let t = read_u64(&mut r)? as usize;
        if n == 0 || n > u32::MAX as usize || t > u32::MAX as usize {
            return Err(Error::Format(format!("implausible header n = {n}, T = {t}")));
        }
        let mut gamma = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            let gv = f64::from_le_bytes(read_array(&mut r)?);
            if !(0.0..=1.0).contains(&gv) {
                return Err(Error::Format(format!("gamma value {gv} outside [0, 1]")));
            }
            gamma.push(gv);
        }
        let gamma = GammaTable::from_gamma(gamma);
        if t > 0 && gamma.big_gamma <= 0.0 {
            return Err(Error::Format("samples present but every gamma is zero".into()));
        }
        let mut sources = Vec::with_capacity(t.min(1 << 24));
        let mut offsets = vec![0u64];
        let mut members = Vec::new();
        for j in 0..t {
            let src = u32::from_le_bytes(read_array(&mut r)?);
            let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
            if len < 2 || len > n {
                return Err(Error::Format(format!("sample {j} has invalid length {len}")));
            }
            let start = members.len();
            for _ in 0..len {
                let u = u32::from_le_bytes(read_array(&mut r)?);
                if u as usize >= n {
                    return Err(Error::Format(format!("sample {j} names node {u} >= {n}")));
                }
                members.push(u);
            }
            let nodes = &members[start..];
            if nodes.windows(2).any(|p| p[0] >= p[1]) {
                return Err(Error::Format(format!("sample {j} is not strictly sorted")));
            }
            if nodes.binary_search(&src).is_err() || gamma.gamma[src as usize] <= 0.0 {
                return Err(Error::Format(format!("sample {j} has an invalid source {src}")));
            }
            sources.push(src);
            offsets.push(members.len() as u64);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::Format("trailing bytes after last sample".into()));
        }
        let mut store = SketchStore {
            n,
            gamma,
            sources,
            offsets,
            members,
            inv_offsets: Vec::new(),
            inv_samples: Vec::new(),
            seed: 0,
            family: FAMILY_SKETCH,
        };
        store.rebuild_index();
        Ok(store)
    }
}

const MAGIC: &[u8; 5] = b"ROIS1";

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf)?;
    Ok(buf)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

/// Per-caller query scratch over a shared store.
pub struct SketchQuery<'s> {
    store: &'s SketchStore,
    seen: Visited,
}

impl SketchQuery<'_> {
    /// `(C', C)`: samples meeting `S`, and those among them rooted outside `S`.
    pub fn coverage(&mut self, s: &SeedSet) -> (u64, u64) {
        self.seen.reset();
        let (mut hit, mut outside) = (0, 0);
        for &v in s.nodes() {
            for &j in self.store.containing(v) {
                if self.seen.insert(j as usize) {
                    hit += 1;
                    if !s.contains(self.store.source(j as usize)) {
                        outside += 1;
                    }
                }
            }
        }
        (hit, outside)
    }

    /// `C'/|R| Gamma + sum_{v in S} (1 - gamma_v)`.
    pub fn influence(&mut self, s: &SeedSet) -> f64 {
        if self.store.exact_mode() {
            return s.len() as f64;
        }
        let (hit, _) = self.coverage(s);
        hit as f64 * self.store.scale() + self.store.gamma.seed_slack(s)
    }

    /// `C/|R| Gamma`.
    pub fn outward(&mut self, s: &SeedSet) -> f64 {
        if self.store.exact_mode() {
            return 0.0;
        }
        let (_, outside) = self.coverage(s);
        outside as f64 * self.store.scale()
    }
}

/// Indicator that a fresh sample meets `S` from a source outside `S`, plus
/// a constant offset (used by the verification rule).
pub struct RoisIndicatorSource<'m, 'g> {
    model: &'m RoisModel<'g>,
    in_seed: Vec<bool>,
    outside_only: bool,
    offset: f64,
}

impl<'m, 'g> RoisIndicatorSource<'m, 'g> {
    pub fn outward(model: &'m RoisModel<'g>, s: &SeedSet) -> Self {
        RoisIndicatorSource {
            model,
            in_seed: s.mask(model.g.node_count()),
            outside_only: true,
            offset: 0.0,
        }
    }

    /// `min(|R ∩ S|, 1) + offset`.
    pub fn hits_with_offset(model: &'m RoisModel<'g>, s: &SeedSet, offset: f64) -> Self {
        RoisIndicatorSource {
            model,
            in_seed: s.mask(model.g.node_count()),
            outside_only: false,
            offset,
        }
    }
}

pub struct RoisIndicatorWorker<'a, 'g> {
    src: &'a RoisIndicatorSource<'a, 'g>,
    sampler: RoisSampler<'a, 'g>,
    buf: Vec<NodeId>,
}

impl Draw for RoisIndicatorWorker<'_, '_> {
    #[inline]
    fn draw(&mut self, rng: &mut RandomStream) -> f64 {
        let source = self.sampler.sample_into(rng, &mut self.buf);
        let mask = &self.src.in_seed;
        let hit = if self.src.outside_only && mask[source.index()] {
            false
        } else {
            self.buf.iter().any(|u| mask[u.index()])
        };
        f64::from(u8::from(hit)) + self.src.offset
    }
}

impl<'m, 'g> BoundedSource for RoisIndicatorSource<'m, 'g> {
    type Worker<'a>
        = RoisIndicatorWorker<'a, 'g>
    where
        Self: 'a;

    fn bounds(&self) -> (f64, f64) {
        (self.offset, 1.0 + self.offset)
    }

    fn worker(&self) -> RoisIndicatorWorker<'_, 'g> {
        RoisIndicatorWorker {
            src: self,
            sampler: self.model.sampler().expect("gamma > 0 checked by caller"),
            buf: Vec::new(),
        }
    }
}

/// `(eps, delta)`-estimate of outward influence by running the stopping
/// rule on fresh sample indicators and scaling by `Gamma`. A zero-mean
/// indicator (e.g. `S = V`) ends in `BudgetExceeded`.
pub fn adaptive_query_outward(
    model: &RoisModel<'_>,
    s: &SeedSet,
    eps: f64,
    delta: f64,
    opts: &RunOptions,
) -> Result<EstimationResult> {
    if model.big_gamma() <= 0.0 {
        return domain("graph has no edges; reverse outward samples are undefined");
    }
    let src = RoisIndicatorSource::outward(model, s);
    let mut r = gsra(&src, eps, delta, opts)?;
    r.estimate *= model.big_gamma();
    Ok(r)
}

//! Probabilistic directed graphs with mirrored in/out adjacency.
//!
//! Nodes are dense `NodeId`s in `[0, n)`. Both adjacency directions are kept
//! in CSR form with neighbors in ascending id order, which fixes the
//! neighbor ordering every sampler in this crate relies on.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How edge probabilities are assigned when a graph is loaded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightingModel {
    /// `w(u, v) = 1 / d_in(v)`.
    WeightedCascade,
    /// Every edge gets the same probability `p` in `(0, 1)`.
    Constant(f64),
    /// Third column of the edge list.
    FromFile,
}

impl WeightingModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightingModel::Constant(p) if !(p > 0.0 && p < 1.0) => {
                domain(format!("constant edge probability must lie in (0, 1), got {p}"))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for WeightingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let model = match s {
            "wc" => WeightingModel::WeightedCascade,
            "file" => WeightingModel::FromFile,
            _ => match s.strip_prefix("const=") {
                Some(p) => WeightingModel::Constant(
                    p.parse()
                        .map_err(|_| Error::Domain(format!("bad constant probability '{p}'")))?,
                ),
                None => return domain(format!("unknown weighting model '{s}'")),
            },
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Clone, Debug, Default)]
struct Csr {
    offsets: Vec<usize>,
    nodes: Vec<NodeId>,
    weights: Vec<f64>,
    /// Per node, `cum[e] = Pr[some edge up to e is live]`; the last entry of
    /// a node's range is the probability that any of its edges is live.
    cum: Vec<f64>,
    /// Per node, the probability that any of its edges is live.
    any: Vec<f64>,
}

impl Csr {
    #[inline]
    fn range(&self, u: usize) -> std::ops::Range<usize> {
        self.offsets[u]..self.offsets[u + 1]
    }

    fn fill_cum(&mut self) {
        let n = self.offsets.len() - 1;
        self.cum = vec![0.0; self.weights.len()];
        self.any = vec![0.0; n];
        for u in 0..n {
            let mut acc = 0.0;
            for e in self.range(u) {
                acc += self.weights[e] * (1.0 - acc);
                self.cum[e] = acc;
            }
            self.any[u] = acc;
        }
    }
}

/// Neighbours of one node with the connecting edge weights.
pub type Adjacency = Vec<(NodeId, f64)>;

#[derive(Clone, Debug)]
pub struct ProbabilisticGraph {
    out: Csr,
    inc: Csr,
    labels: Vec<u64>,
    label_index: HashMap<u64, NodeId>,
}

impl ProbabilisticGraph {
    /// Builds a graph over dense ids `0..n` with identity labels.
    ///
    /// Self-loops are dropped and duplicate `(u, v)` pairs are merged by
    /// noisy-or, `w = 1 - (1 - w1)(1 - w2)`.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32, f64)>,
    {
        let mut list = Vec::new();
        for (u, v, w) in edges {
            for x in [u, v] {
                if x as usize >= n {
                    return Err(Error::Index { index: x as usize, n });
                }
            }
            check_weight(w)?;
            list.push((u, v, w));
        }
        let labels = (0..n as u64).collect();
        Self::assemble(labels, list)
    }

    fn assemble(labels: Vec<u64>, mut edges: Vec<(u32, u32, f64)>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return domain("graph has no nodes");
        }
        if n > u32::MAX as usize {
            return Err(Error::Capacity(format!("{n} nodes exceed the 32-bit id space")));
        }
        edges.retain(|&(u, v, _)| u != v);
        edges.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => {
                    last.2 = 1.0 - (1.0 - last.2) * (1.0 - w);
                }
                _ => merged.push((u, v, w)),
            }
        }

        let mut out = Csr {
            offsets: vec![0; n + 1],
            nodes: Vec::with_capacity(merged.len()),
            weights: Vec::with_capacity(merged.len()),
            cum: Vec::new(),
            any: Vec::new(),
        };
        let mut in_counts = vec![0usize; n + 1];
        for &(u, v, w) in &merged {
            out.offsets[u as usize + 1] += 1;
            in_counts[v as usize + 1] += 1;
            out.nodes.push(NodeId(v));
            out.weights.push(w);
        }
        for i in 0..n {
            out.offsets[i + 1] += out.offsets[i];
            in_counts[i + 1] += in_counts[i];
        }

        let m = merged.len();
        let mut inc = Csr {
            offsets: in_counts.clone(),
            nodes: vec![NodeId(0); m],
            weights: vec![0.0; m],
            cum: Vec::new(),
            any: Vec::new(),
        };
        // edges are sorted by source, so each in-list fills in ascending order
        let mut cursor = in_counts;
        for &(u, v, w) in &merged {
            let slot = cursor[v as usize];
            inc.nodes[slot] = NodeId(u);
            inc.weights[slot] = w;
            cursor[v as usize] += 1;
        }

        out.fill_cum();
        inc.fill_cum();
        let label_index = labels.iter().enumerate().map(|(i, &l)| (l, NodeId(i as u32))).collect();
        Ok(ProbabilisticGraph {
            out,
            inc,
            labels,
            label_index,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.out.nodes.len()
    }

    /// Out-neighbors of `u` and the matching edge weights.
    #[inline]
    pub fn out_edges(&self, u: NodeId) -> (&[NodeId], &[f64]) {
        let r = self.out.range(u.index());
        (&self.out.nodes[r.clone()], &self.out.weights[r])
    }

    /// In-neighbors of `v` and the matching edge weights.
    #[inline]
    pub fn in_edges(&self, v: NodeId) -> (&[NodeId], &[f64]) {
        let r = self.inc.range(v.index());
        (&self.inc.nodes[r.clone()], &self.inc.weights[r])
    }

    /// Cumulative live probabilities over `u`'s out-edges.
    #[inline]
    pub(crate) fn out_cum(&self, u: NodeId) -> &[f64] {
        &self.out.cum[self.out.range(u.index())]
    }

    #[inline]
    pub(crate) fn out_any(&self, u: NodeId) -> f64 {
        self.out.any[u.index()]
    }

    #[inline]
    pub(crate) fn in_any(&self, v: NodeId) -> f64 {
        self.inc.any[v.index()]
    }

    /// Cumulative live probabilities over `v`'s in-edges.
    #[inline]
    pub(crate) fn in_cum(&self, v: NodeId) -> &[f64] {
        &self.inc.cum[self.inc.range(v.index())]
    }

    /// Offset of `v`'s first in-edge in the flat in-adjacency arrays.
    #[inline]
    pub(crate) fn in_offset(&self, v: NodeId) -> usize {
        self.inc.offsets[v.index()]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out.range(u.index()).len()
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.inc.range(v.index()).len()
    }

    /// `(out list, in list)` of `u`, both in ascending id order.
    pub fn neighborhoods(&self, u: NodeId) -> Result<(Adjacency, Adjacency)> {
        self.check_node(u)?;
        let zip = |(nodes, weights): (&[NodeId], &[f64])| nodes.iter().copied().zip(weights.iter().copied()).collect();
        Ok((zip(self.out_edges(u)), zip(self.in_edges(u))))
    }

    pub fn check_node(&self, u: NodeId) -> Result<()> {
        if u.index() >= self.node_count() {
            return Err(Error::Index {
                index: u.index(),
                n: self.node_count(),
            });
        }
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count() as u32).map(NodeId)
    }

    /// All edges `(u, v, w)` in CSR order (by source, then target).
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.nodes().flat_map(move |u| {
            let (vs, ws) = self.out_edges(u);
            vs.iter().zip(ws).map(move |(&v, &w)| (u, v, w))
        })
    }

    /// External label of a node.
    pub fn label(&self, u: NodeId) -> u64 {
        self.labels[u.index()]
    }

    /// Dense id of an external label.
    pub fn node_of(&self, label: u64) -> Option<NodeId> {
        self.label_index.get(&label).copied()
    }

    /// Copy of this graph with weighted-cascade weights `1 / d_in(v)`.
    pub fn assign_wc_weights(&self) -> ProbabilisticGraph {
        let mut g = self.clone();
        reweight_wc(&mut g);
        g
    }

    /// Copy of this graph with every edge weight set to `p`.
    pub fn with_constant_weight(&self, p: f64) -> Result<ProbabilisticGraph> {
        WeightingModel::Constant(p).validate()?;
        let mut g = self.clone();
        g.out.weights.iter_mut().for_each(|w| *w = p);
        g.inc.weights.iter_mut().for_each(|w| *w = p);
        g.out.fill_cum();
        g.inc.fill_cum();
        Ok(g)
    }

    /// First node whose incoming weights sum above one, with that sum.
    pub fn lt_violation(&self) -> Option<(NodeId, f64)> {
        self.nodes().find_map(|v| {
            let total: f64 = self.in_edges(v).1.iter().sum();
            (total > 1.0 + 1e-9).then_some((v, total))
        })
    }

    /// Checks the linear-threshold precondition `sum_u w(u, v) <= 1`.
    pub fn check_lt_weights(&self) -> Result<()> {
        match self.lt_violation() {
            Some((v, total)) => domain(format!(
                "node {} has incoming weight sum {total} > 1; not a valid LT instance",
                self.label(v)
            )),
            None => Ok(()),
        }
    }

    /// Canonical edge list: one `u v w` line per edge using external labels,
    /// weights with 17 significant digits.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for (u, v, w) in self.edges() {
            writeln!(out, "{} {} {:.16e}", self.label(u), self.label(v), w)?;
        }
        Ok(())
    }
}

fn reweight_wc(g: &mut ProbabilisticGraph) {
    let n = g.node_count();
    for v in 0..n {
        let r = g.inc.range(v);
        let w = 1.0 / r.len() as f64;
        g.inc.weights[r].iter_mut().for_each(|x| *x = w);
    }
    for u in 0..n {
        for e in g.out.range(u) {
            let v = g.out.nodes[e].index();
            g.out.weights[e] = 1.0 / g.inc.range(v).len() as f64;
        }
    }
    g.out.fill_cum();
    g.inc.fill_cum();
}

fn check_weight(w: f64) -> Result<()> {
    if w > 0.0 && w <= 1.0 {
        Ok(())
    } else {
        domain(format!("edge weight {w} is outside (0, 1]"))
    }
}

/// Reads a whitespace-separated edge list `u v [w]`.
///
/// Blank lines and lines starting with `#` are skipped. Labels are mapped to
/// dense ids in first-seen order.
pub fn load_edge_list<R: BufRead>(reader: R, model: WeightingModel) -> Result<ProbabilisticGraph> {
    model.validate()?;
    let mut labels = Vec::new();
    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut edges = Vec::new();
    let mut intern = |label: u64, labels: &mut Vec<u64>| -> u32 {
        *index.entry(label).or_insert_with(|| {
            labels.push(label);
            (labels.len() - 1) as u32
        })
    };

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let mut endpoint = |what: &str| -> Result<u64> {
            let tok = fields.next().ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("missing {what} node"),
            })?;
            tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad {what} node '{tok}'"),
            })
        };
        let u = endpoint("source")?;
        let v = endpoint("target")?;
        let weight = match fields.next() {
            Some(tok) => Some(tok.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad weight '{tok}'"),
            })?),
            None => None,
        };
        if let Some(extra) = fields.next() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("unexpected field '{extra}'"),
            });
        }
        let w = match model {
            WeightingModel::FromFile => {
                let w = weight.ok_or_else(|| Error::Parse {
                    line: lineno,
                    msg: "weight column required".into(),
                })?;
                check_weight(w)
                    .map_err(|_| Error::Domain(format!("line {lineno}: edge weight {w} is outside (0, 1]")))?;
                w
            }
            WeightingModel::Constant(p) => p,
            // placeholder until in-degrees are known
            WeightingModel::WeightedCascade => 1.0,
        };
        let (ui, vi) = (intern(u, &mut labels), intern(v, &mut labels));
        edges.push((ui, vi, w));
    }

    if model == WeightingModel::WeightedCascade || matches!(model, WeightingModel::Constant(_)) {
        // structure only: collapse duplicates before weights are assigned
        edges.sort_by_key(|e| (e.0, e.1));
        edges.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    }
    let mut g = ProbabilisticGraph::assemble(labels, edges)?;
    if model == WeightingModel::WeightedCascade {
        reweight_wc(&mut g);
    }
    Ok(g)
}

/// A nonempty seed set: sorted, duplicate-free node ids of one graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeedSet {
    nodes: Vec<NodeId>,
}

impl SeedSet {
    pub fn new(g: &ProbabilisticGraph, nodes: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        for &u in &nodes {
            g.check_node(u)?;
        }
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return domain("seed set is empty");
        }
        Ok(SeedSet { nodes })
    }

    /// Seed set from dense indices.
    pub fn from_indices(g: &ProbabilisticGraph, ids: &[u32]) -> Result<Self> {
        Self::new(g, ids.iter().map(|&i| NodeId(i)))
    }

    /// Seed set from external labels.
    pub fn from_labels(g: &ProbabilisticGraph, labels: &[u64]) -> Result<Self> {
        let nodes = labels
            .iter()
            .map(|&l| {
                g.node_of(l)
                    .ok_or_else(|| Error::Domain(format!("unknown node label {l}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(g, nodes)
    }

    pub(crate) fn new_unchecked(mut nodes: Vec<NodeId>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        SeedSet { nodes }
    }

    pub fn all(g: &ProbabilisticGraph) -> Self {
        SeedSet {
            nodes: g.nodes().collect(),
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.nodes.binary_search(&u).is_ok()
    }

    /// Membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for u in &self.nodes {
            m[u.index()] = true;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, model: WeightingModel) -> Result<ProbabilisticGraph> {
        load_edge_list(text.as_bytes(), model)
    }

    #[test]
    fn figure_one_graph_loads() {
        let g = load("0 1 0.1\n1 2 0.1\n1 3 0.1\n", WeightingModel::FromFile).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 3);
        let (out, inc) = g.neighborhoods(NodeId(1)).unwrap();
        assert_eq!(out, vec![(NodeId(2), 0.1), (NodeId(3), 0.1)]);
        assert_eq!(inc, vec![(NodeId(0), 0.1)]);
        let (out, inc) = g.neighborhoods(NodeId(2)).unwrap();
        assert!(out.is_empty());
        assert_eq!(inc, vec![(NodeId(1), 0.1)]);
    }

    #[test]
    fn wc_on_two_cycle_gives_unit_weights() {
        let g = load("0 1\n1 0\n", WeightingModel::WeightedCascade).unwrap();
        assert_eq!(g.edges().map(|e| e.2).collect::<Vec<_>>(), vec![1.0, 1.0]);
    }

    #[test]
    fn duplicates_merge_by_noisy_or() {
        let g = load("0 1 0.3\n0 1 0.5\n", WeightingModel::FromFile).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!((g.edges().next().unwrap().2 - 0.65).abs() < 1e-15);
    }

    #[test]
    fn wc_star_and_chain() {
        let star = ProbabilisticGraph::from_edges(5, (1..5).map(|u| (u, 0, 0.5)))
            .unwrap()
            .assign_wc_weights();
        assert!(star.in_edges(NodeId(0)).1.iter().all(|&w| w == 0.25));
        let chain = ProbabilisticGraph::from_edges(3, [(0, 1, 0.2), (1, 2, 0.3)])
            .unwrap()
            .assign_wc_weights();
        assert_eq!(chain.edges().map(|e| e.2).collect::<Vec<_>>(), vec![1.0, 1.0]);
    }

    #[test]
    fn comments_labels_and_self_loops() {
        let g = load("# header\n\n10 20\n20 20\n20 7\n", WeightingModel::Constant(0.2)).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.node_of(10), Some(NodeId(0)));
        assert_eq!(g.node_of(7), Some(NodeId(2)));
        assert_eq!(g.label(NodeId(1)), 20);
    }

    #[test]
    fn isolated_node_has_empty_neighborhoods() {
        let g = ProbabilisticGraph::from_edges(3, [(0, 1, 0.5)]).unwrap();
        let (out, inc) = g.neighborhoods(NodeId(2)).unwrap();
        assert!(out.is_empty() && inc.is_empty());
        assert!(matches!(
            g.neighborhoods(NodeId(3)),
            Err(Error::Index { index: 3, n: 3 })
        ));
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            load("0 x 0.1\n", WeightingModel::FromFile),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            load("# c\n0 1\n", WeightingModel::FromFile),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            load("0 1 1.5\n", WeightingModel::FromFile),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            load("0 1 0\n", WeightingModel::FromFile),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            load("# nothing\n", WeightingModel::FromFile),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            load("0 1\n", WeightingModel::Constant(1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn weighting_model_parses() {
        assert_eq!("wc".parse::<WeightingModel>().unwrap(), WeightingModel::WeightedCascade);
        assert_eq!(
            "const=0.01".parse::<WeightingModel>().unwrap(),
            WeightingModel::Constant(0.01)
        );
        assert!("const=0".parse::<WeightingModel>().is_err());
        assert!("bogus".parse::<WeightingModel>().is_err());
    }

    #[test]
    fn lt_check_names_offending_node() {
        let g = ProbabilisticGraph::from_edges(3, [(0, 2, 0.7), (1, 2, 0.6)]).unwrap();
        let err = g.check_lt_weights().unwrap_err().to_string();
        assert!(err.contains("node 2"), "{err}");
        assert!(g.assign_wc_weights().check_lt_weights().is_ok());
    }
}

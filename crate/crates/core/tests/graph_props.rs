use outinf_core::{load_edge_list, NodeId, ProbabilisticGraph, WeightingModel};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = ProbabilisticGraph> {
    (2usize..30).prop_flat_map(|n| {
        let edge = (0..n as u32, 1..n as u32, 0.01f64..=1.0).prop_map(move |(u, d, w)| (u, (u + d) % n as u32, w));
        proptest::collection::vec(edge, 1..120).prop_map(move |es| ProbabilisticGraph::from_edges(n, es).unwrap())
    })
}

fn labelled_edges(g: &ProbabilisticGraph) -> Vec<(u64, u64, u64)> {
    let mut es: Vec<_> = g
        .edges()
        .map(|(u, v, w)| (g.label(u), g.label(v), w.to_bits()))
        .collect();
    es.sort_unstable();
    es
}

proptest! {
    #[test]
    fn in_adjacency_mirrors_out_adjacency(g in graph_strategy()) {
        let n = g.node_count();
        let mut rebuilt: Vec<Vec<(NodeId, u64)>> = vec![Vec::new(); n];
        for u in g.nodes() {
            let (vs, ws) = g.out_edges(u);
            for (&v, &w) in vs.iter().zip(ws) {
                rebuilt[v.index()].push((u, w.to_bits()));
            }
        }
        for v in g.nodes() {
            let (us, ws) = g.in_edges(v);
            let actual: Vec<(NodeId, u64)> = us.iter().copied().zip(ws.iter().map(|w| w.to_bits())).collect();
            prop_assert_eq!(&actual, &rebuilt[v.index()]);
            prop_assert_eq!(g.in_degree(v), actual.len());
        }
        prop_assert_eq!(g.edges().count(), g.edge_count());
    }

    #[test]
    fn edge_list_round_trip(g in graph_strategy()) {
        let mut text = Vec::new();
        g.write_edge_list(&mut text).unwrap();
        let h = load_edge_list(text.as_slice(), WeightingModel::FromFile).unwrap();
        prop_assert_eq!(labelled_edges(&g), labelled_edges(&h));
        let mut again = Vec::new();
        h.write_edge_list(&mut again).unwrap();
        let h2 = load_edge_list(again.as_slice(), WeightingModel::FromFile).unwrap();
        prop_assert_eq!(labelled_edges(&h), labelled_edges(&h2));
        prop_assert_eq!(h.node_count(), h2.node_count());
    }

    #[test]
    fn weighted_cascade_sums_to_one(g in graph_strategy()) {
        let wc = g.assign_wc_weights();
        for v in wc.nodes() {
            let ws = wc.in_edges(v).1;
            if ws.is_empty() {
                continue;
            }
            let sum: f64 = ws.iter().sum();
            prop_assert!((sum - 1.0).abs() <= ws.len() as f64 * f64::EPSILON, "sum {} at {:?}", sum, v);
        }
        prop_assert!(wc.check_lt_weights().is_ok());
    }

    #[test]
    fn wc_from_file_matches_reweighting(g in graph_strategy()) {
        let mut text = Vec::new();
        g.write_edge_list(&mut text).unwrap();
        let loaded = load_edge_list(text.as_slice(), WeightingModel::WeightedCascade).unwrap();
        let direct = load_edge_list(text.as_slice(), WeightingModel::FromFile).unwrap().assign_wc_weights();
        prop_assert_eq!(labelled_edges(&loaded), labelled_edges(&direct));
    }
}

#[test]
fn constant_model_overrides_file_weights() {
    let g = load_edge_list("1 2 0.3\n2 3 0.9\n".as_bytes(), WeightingModel::Constant(0.25)).unwrap();
    assert!(g.edges().all(|(_, _, w)| w == 0.25));
    assert_eq!(g.node_of(3), Some(NodeId(2)));
}

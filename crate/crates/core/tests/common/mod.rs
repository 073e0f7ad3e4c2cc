#![allow(dead_code)]

use std::path::PathBuf;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use swdrank::config::{EngineConfig, QuerySettings};
use swdrank::corpus::RelationKind;
use swdrank::engine::{build, ingest_dir};
use swdrank::graph::{DataGraph, RateTable, TransferDataGraph, TransferRates, DOCUMENT_LABEL};
use swdrank::hits::{build_subgraph, oracle_hits, top_ranked, SubGraph};
use swdrank::index::{tokenize, top_n};
use swdrank::store::EngineState;
use swdrank::synth::transfer_graph;

pub const GOLDEN_QUERY: &str = "ranking";
pub const GOLDEN_N: usize = 5;
pub const GOLDEN_C: usize = 2;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus20")
}

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/golden/query_ranking.json")
}

pub fn golden_settings() -> QuerySettings {
    QuerySettings {
        n: GOLDEN_N,
        c: GOLDEN_C,
        ..QuerySettings::default()
    }
}

/// The fixture corpus ingested and built with the default config.
pub fn fixture_state() -> EngineState {
    let config = EngineConfig::default();
    let (mut state, summary) = ingest_dir(&fixture_dir(), &config).expect("fixture ingests");
    assert!(summary.failures.is_empty());
    build(&mut state, &config.rank, false).expect("fixture builds");
    state
}

/// Golden query lists computed from the dense eigenvector oracle instead of
/// the iterative HITS.
pub fn oracle_golden(state: &EngineState) -> Value {
    let config = EngineConfig::default();
    let settings = golden_settings();
    let ranks = &state.ranks.as_ref().expect("built").scores;
    let terms = tokenize(GOLDEN_QUERY, &config.tokenizer);
    let seeds = top_n(&state.index, &terms, settings.n).expect("query matches");
    let sub = build_subgraph(&state.graph, ranks, &seeds, settings.c);
    let oracle = oracle_hits(&sub, settings.weighted);
    let list = |weights: &[f64]| {
        top_ranked(&sub.nodes, weights, settings.top_k)
            .into_iter()
            .map(|r| json!({"doc_id": r.doc_id, "uri": state.docs[r.doc_id].uri, "weight": r.weight}))
            .collect::<Vec<_>>()
    };
    json!({
        "query": GOLDEN_QUERY,
        "n": settings.n,
        "c": settings.c,
        "top_k": settings.top_k,
        "damping": state.rank_params.expect("built").damping,
        "seeds": seeds,
        "subgraph_nodes": sub.nodes,
        "authorities": list(&oracle.authority),
        "hubs": list(&oracle.hub),
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Document rates whose eight values sum to at most 1, so every node's
/// outgoing mass stays within 1.
pub fn random_rates(rng: &mut impl Rng) -> RateTable {
    let raw: Vec<f64> = (0..8).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let budget = rng.gen_range(0.05..=1.0);
    let scaled: Vec<f64> = raw.iter().map(|v| v / total * budget).collect();
    RelationKind::LINKING
        .iter()
        .enumerate()
        .map(|(i, k)| {
            (
                k.role().to_owned(),
                TransferRates::new(scaled[2 * i], scaled[2 * i + 1]),
            )
        })
        .collect()
}

pub fn random_data_graph(rng: &mut impl Rng, nodes: usize, density: f64) -> DataGraph {
    let mut g = DataGraph::new();
    for _ in 0..nodes {
        g.add_node(DOCUMENT_LABEL, Default::default());
    }
    for from in 0..nodes {
        for to in 0..nodes {
            for kind in RelationKind::LINKING {
                if rng.gen_bool(density / 4.0) {
                    g.add_edge(from, to, kind.role()).expect("each triple drawn once");
                }
            }
        }
    }
    g
}

/// Random graph of 1..=max_nodes nodes under random valid rates.
pub fn random_transfer_graph(rng: &mut impl Rng, max_nodes: usize) -> TransferDataGraph {
    let n = rng.gen_range(1..=max_nodes);
    let density = rng.gen_range(0.0..0.3);
    let data = random_data_graph(rng, n, density);
    transfer_graph(&data, &random_rates(rng)).expect("rates cover every role")
}

/// Random sub-graph with at least one positive-weight edge.
pub fn random_subgraph(rng: &mut impl Rng, max_nodes: usize) -> SubGraph {
    loop {
        let n = rng.gen_range(2..=max_nodes);
        let mut weights = Vec::new();
        for from in 0..n {
            for to in 0..n {
                if from != to && rng.gen_bool(0.15) {
                    weights.push((from, to, rng.gen_range(0.05..1.0)));
                }
            }
        }
        if weights.is_empty() {
            continue;
        }
        let graph = TransferDataGraph::from_weights(n, &weights).expect("valid weights");
        let ranks: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let seeds: Vec<usize> = (0..rng.gen_range(1..=n.min(5))).map(|_| rng.gen_range(0..n)).collect();
        let sub = build_subgraph(&graph, &ranks, &seeds, rng.gen_range(0..6));
        if sub.edges.iter().any(|e| e.weight > 0.0) {
            return sub;
        }
    }
}

/// True when every pair the oracle separates by more than `gap` is ordered
/// the same way by `weights`.
pub fn same_ranking(weights: &[f64], oracle: &[f64], gap: f64) -> bool {
    for i in 0..oracle.len() {
        for j in 0..oracle.len() {
            if oracle[i] > oracle[j] + gap && weights[i] <= weights[j] {
                return false;
            }
        }
    }
    true
}

/// Weight tolerance between the iterative lists and the oracle golden.
pub const GOLDEN_TOLERANCE: f64 = 1e-6;

/// Checks `(doc_id, weight)` lists against a golden list. Weights must agree
/// position by position within [`GOLDEN_TOLERANCE`]. Ids must agree exactly,
/// except inside a run of golden weights tied within the tolerance, where
/// they only need to be the same set. A tied run cut off at `top_k` may hold
/// any ids carrying those weights.
pub fn list_matches(actual: &[(usize, f64)], golden: &Value, top_k: usize) -> Result<(), String> {
    let golden = golden.as_array().ok_or("golden list is not an array")?;
    let golden: Vec<(usize, f64)> = golden
        .iter()
        .map(|g| Some((g["doc_id"].as_u64()? as usize, g["weight"].as_f64()?)))
        .collect::<Option<_>>()
        .ok_or("golden entry lacks doc_id or weight")?;
    if actual.len() != golden.len() {
        return Err(format!("length {} vs golden {}", actual.len(), golden.len()));
    }
    for (pos, ((_, w), (_, gw))) in actual.iter().zip(&golden).enumerate() {
        if (w - gw).abs() > GOLDEN_TOLERANCE {
            return Err(format!("rank {pos}: weight {w} vs golden {gw}"));
        }
    }
    let mut start = 0;
    while start < golden.len() {
        let mut end = start + 1;
        while end < golden.len() && (golden[end - 1].1 - golden[end].1).abs() <= GOLDEN_TOLERANCE {
            end += 1;
        }
        let mut ids: Vec<usize> = actual[start..end].iter().map(|p| p.0).collect();
        let mut expected: Vec<usize> = golden[start..end].iter().map(|p| p.0).collect();
        ids.sort_unstable();
        expected.sort_unstable();
        let truncated = end == top_k && end - start > 1;
        if ids != expected && !truncated {
            return Err(format!("ranks {start}..{end}: docs {ids:?} vs golden {expected:?}"));
        }
        start = end;
    }
    Ok(())
}

pub fn load_golden() -> Value {
    let text = std::fs::read_to_string(golden_path()).expect("golden file present");
    serde_json::from_str(&text).expect("golden file parses")
}

/// Single link type, forward rate 1, backward rate 0. Returns the weighted
/// graph and its plain link list.
pub fn single_type_graph(seed: u64, n: usize) -> (TransferDataGraph, Vec<(usize, usize)>) {
    let mut r = rng(seed);
    let density = r.gen_range(0.02..0.3);
    let mut data = DataGraph::new();
    for _ in 0..n {
        data.add_node(DOCUMENT_LABEL, Default::default());
    }
    let mut links = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if r.gen_bool(density) {
                data.add_edge(from, to, "link").unwrap();
                links.push((from, to));
            }
        }
    }
    let mut schema = swdrank::graph::SchemaGraph::new([DOCUMENT_LABEL]);
    schema.add_edge(DOCUMENT_LABEL, DOCUMENT_LABEL, "link").unwrap();
    let rates: RateTable = [("link".to_string(), TransferRates::new(1.0, 0.0))]
        .into_iter()
        .collect();
    let mapping = swdrank::graph::check_conformance(&data, &schema).unwrap();
    let transfer = swdrank::graph::expand_transfer_schema(&schema, &rates).unwrap();
    (
        swdrank::graph::derive_transfer_data_graph(&data, &transfer, &mapping),
        links,
    )
}

/// `PR(A) = (1 - d) + d Σ PR(T)/C(T)` over plain links, iterated until
/// successive vectors agree to 1e-13.
pub fn pagerank(n: usize, links: &[(usize, usize)], d: f64) -> Vec<f64> {
    let mut out_degree = vec![0usize; n];
    for &(from, _) in links {
        out_degree[from] += 1;
    }
    let mut pr = vec![1.0; n];
    loop {
        let mut next = vec![1.0 - d; n];
        for &(from, to) in links {
            next[to] += d * pr[from] / out_degree[from] as f64;
        }
        let change = pr.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pr = next;
        if change < 1e-13 {
            return pr;
        }
    }
}

/// HITS run to convergence, for comparison with the dense oracle. The
/// default cap of 100 steps stops early on sub-graphs whose top two
/// singular values are close.
pub fn converged_hits(weighted: bool) -> swdrank::hits::SubGraphParams {
    swdrank::hits::SubGraphParams {
        weighted,
        epsilon: 1e-13,
        max_iter: 100_000,
        ..Default::default()
    }
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// How far one more power step would move the oracle's vectors. Large values
/// mean the top two eigenvalues are too close for the fixed step count, and
/// the oracle is no reference.
pub fn oracle_residual(sub: &SubGraph, weighted: bool, oracle: &swdrank::hits::OracleHits) -> f64 {
    let n = sub.nodes.len();
    let edges = sub.local_edges(weighted);
    let step = |v: &[f64], transpose: bool| {
        let mut mid = vec![0.0; n];
        for &(from, to, w) in &edges {
            if transpose {
                mid[from] += w * v[to];
            } else {
                mid[to] += w * v[from];
            }
        }
        let mut out = vec![0.0; n];
        for &(from, to, w) in &edges {
            if transpose {
                out[to] += w * mid[from];
            } else {
                out[from] += w * mid[to];
            }
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.iter().map(|x| x / norm).collect::<Vec<_>>()
    };
    // EᵀE a: hub sums over out-edges, then authority sums over in-edges.
    let a = step(&oracle.authority, true);
    let h = step(&oracle.hub, false);
    max_gap(&a, &oracle.authority).max(max_gap(&h, &oracle.hub))
}

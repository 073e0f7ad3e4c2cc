//! Query-time stage: a bounded sub-graph around the seed documents, and
//! (optionally edge-weighted) HITS over it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Direction, NodeId, TransferDataGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HitsError {
    #[error("sub-graph has no edges that carry weight; HITS is undefined")]
    DegenerateSubGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubGraphParams {
    /// Number of seed documents.
    pub n: usize,
    /// Maximum in-linking documents added per seed.
    pub inlink_cap: usize,
    pub weighted: bool,
    /// Threshold on the largest per-entry change of either vector.
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for SubGraphParams {
    fn default() -> Self {
        SubGraphParams {
            n: 10,
            inlink_cap: 3,
            weighted: true,
            epsilon: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubGraph {
    /// Sorted ascending.
    pub nodes: Vec<NodeId>,
    pub seeds: Vec<NodeId>,
    pub edges: Vec<SubEdge>,
}

impl SubGraph {
    fn local(&self, node: NodeId) -> usize {
        self.nodes
            .binary_search(&node)
            .expect("edge endpoint inside the sub-graph")
    }

    /// Every node and every forward edge of the graph.
    pub fn whole(graph: &TransferDataGraph) -> Self {
        SubGraph {
            nodes: (0..graph.node_count()).collect(),
            seeds: Vec::new(),
            edges: graph
                .edges()
                .iter()
                .filter(|e| e.direction == Direction::Forward)
                .map(|e| SubEdge {
                    from: e.from,
                    to: e.to,
                    weight: e.weight,
                })
                .collect(),
        }
    }

    /// Edges as `(from, to, weight)` over local positions in `nodes`.
    pub fn local_edges(&self, weighted: bool) -> Vec<(usize, usize, f64)> {
        self.edges
            .iter()
            .map(|e| {
                let w = if weighted { e.weight } else { 1.0 };
                (self.local(e.from), self.local(e.to), w)
            })
            .collect()
    }
}

/// Seeds plus all their forward out-link targets plus, per seed, its `cap`
/// highest-ranked forward in-linkers (ties by id). Expansion is one hop.
/// Every forward edge of the graph with both ends inside is kept.
pub fn build_subgraph(graph: &TransferDataGraph, ranks: &[f64], seeds: &[NodeId], cap: usize) -> SubGraph {
    let mut members: BTreeSet<NodeId> = seeds.iter().copied().collect();
    for &seed in seeds {
        for e in graph.outgoing(seed).filter(|e| e.direction == Direction::Forward) {
            members.insert(e.to);
        }
        let mut inlinkers: Vec<NodeId> = graph
            .incoming(seed)
            .filter(|e| e.direction == Direction::Forward && e.from != seed)
            .map(|e| e.from)
            .collect();
        inlinkers.sort_unstable();
        inlinkers.dedup();
        inlinkers.sort_by(|a, b| ranks[*b].total_cmp(&ranks[*a]).then_with(|| a.cmp(b)));
        members.extend(inlinkers.into_iter().take(cap));
    }
    let edges = members
        .iter()
        .flat_map(|&u| graph.outgoing(u))
        .filter(|e| e.direction == Direction::Forward && members.contains(&e.to))
        .map(|e| SubEdge {
            from: e.from,
            to: e.to,
            weight: e.weight,
        })
        .collect();
    SubGraph {
        nodes: members.into_iter().collect(),
        seeds: seeds.to_vec(),
        edges,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitsScores {
    /// Sub-graph node ids; `authority` and `hub` are parallel to it.
    pub nodes: Vec<NodeId>,
    pub authority: Vec<f64>,
    pub hub: Vec<f64>,
    pub iterations_used: usize,
}

/// Live HITS iteration state, exposed so callers can observe every step.
#[derive(Debug, Clone)]
pub struct HitsRun {
    edges: Vec<(usize, usize, f64)>,
    authority: Vec<f64>,
    hub: Vec<f64>,
}

impl HitsRun {
    /// Starts from every weight equal to `start` (which must be positive).
    pub fn new(sub: &SubGraph, weighted: bool, start: f64) -> Result<Self, HitsError> {
        let edges = sub.local_edges(weighted);
        if !edges.iter().any(|&(_, _, w)| w > 0.0) {
            return Err(HitsError::DegenerateSubGraph);
        }
        let n = sub.nodes.len();
        Ok(HitsRun {
            edges,
            authority: vec![start; n],
            hub: vec![start; n],
        })
    }

    /// One I step then one O step, each followed by normalization. Returns
    /// the largest absolute change across both vectors.
    pub fn step(&mut self) -> f64 {
        let n = self.authority.len();
        let mut authority = vec![0.0; n];
        for &(from, to, w) in &self.edges {
            authority[to] += w * self.hub[from];
        }
        normalize(&mut authority);
        let mut hub = vec![0.0; n];
        for &(from, to, w) in &self.edges {
            hub[from] += w * authority[to];
        }
        normalize(&mut hub);
        let change = max_change(&authority, &self.authority).max(max_change(&hub, &self.hub));
        self.authority = authority;
        self.hub = hub;
        change
    }

    pub fn authority(&self) -> &[f64] {
        &self.authority
    }

    pub fn hub(&self) -> &[f64] {
        &self.hub
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn hits(sub: &SubGraph, params: &SubGraphParams) -> Result<HitsScores, HitsError> {
    let start = 1.0 / (sub.nodes.len().max(1) as f64).sqrt();
    hits_with_start(sub, params, start)
}

/// [`hits`] from a caller-chosen uniform starting weight.
pub fn hits_with_start(sub: &SubGraph, params: &SubGraphParams, start: f64) -> Result<HitsScores, HitsError> {
    let mut run = HitsRun::new(sub, params.weighted, start)?;
    let mut iterations_used = 0;
    for _ in 0..params.max_iter.max(1) {
        iterations_used += 1;
        if run.step() < params.epsilon {
            break;
        }
    }
    Ok(HitsScores {
        nodes: sub.nodes.clone(),
        authority: run.authority,
        hub: run.hub,
        iterations_used,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub doc_id: NodeId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualLists {
    pub authorities: Vec<Ranked>,
    pub hubs: Vec<Ranked>,
}

/// Weight descending, doc id ascending, truncated to `k`.
pub fn top_ranked(nodes: &[NodeId], weights: &[f64], k: usize) -> Vec<Ranked> {
    let mut list: Vec<Ranked> = nodes
        .iter()
        .zip(weights)
        .map(|(&doc_id, &weight)| Ranked { doc_id, weight })
        .collect();
    list.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.doc_id.cmp(&b.doc_id)));
    list.truncate(k);
    list
}

pub fn dual_lists(scores: &HitsScores, k: usize) -> DualLists {
    DualLists {
        authorities: top_ranked(&scores.nodes, &scores.authority, k),
        hubs: top_ranked(&scores.nodes, &scores.hub, k),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleHits {
    pub authority: Vec<f64>,
    pub hub: Vec<f64>,
}

pub const ORACLE_STEPS: usize = 10_000;

/// Dominant eigenvectors of `EᵀE` and `EEᵀ`, formed densely and extracted by
/// a fixed number of power steps. Test oracle for sub-graphs of at most a
/// few hundred nodes.
///
/// The power steps start from `Eᵀ𝟙` and `EEᵀ𝟙`, the vectors [`hits`] holds
/// after its first round. When the top eigenvalue is repeated (for example
/// two disconnected components of equal strength) the limit depends on the
/// start, and this picks the same one.
pub fn oracle_hits(sub: &SubGraph, weighted: bool) -> OracleHits {
    let n = sub.nodes.len();
    let mut e = vec![0.0f64; n * n];
    for (from, to, w) in sub.local_edges(weighted) {
        e[from * n + to] += w;
    }
    // (EᵀE)[i][j] = Σ_k E[k][i] E[k][j];  (EEᵀ)[i][j] = Σ_k E[i][k] E[j][k]
    let mut ete = vec![0.0f64; n * n];
    let mut eet = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            ete[i * n + j] = (0..n).map(|k| e[k * n + i] * e[k * n + j]).sum();
            eet[i * n + j] = (0..n).map(|k| e[i * n + k] * e[j * n + k]).sum();
        }
    }
    let in_sums: Vec<f64> = (0..n).map(|i| (0..n).map(|k| e[k * n + i]).sum()).collect();
    let hub_start = dense_mul(&eet, n, &vec![1.0; n]);
    OracleHits {
        authority: dense_power(&ete, n, in_sums),
        hub: dense_power(&eet, n, hub_start),
    }
}

fn dense_mul(m: &[f64], n: usize, v: &[f64]) -> Vec<f64> {
    (0..n).map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum()).collect()
}

fn dense_power(m: &[f64], n: usize, start: Vec<f64>) -> Vec<f64> {
    let mut v = start;
    if v.iter().all(|x| *x == 0.0) {
        v = vec![1.0; n];
    }
    normalize(&mut v);
    for _ in 0..ORACLE_STEPS {
        let mut next = dense_mul(m, n, &v);
        normalize(&mut next);
        v = next;
    }
    v
}

//! Labeled data graphs, schema graphs, and the weighted authority transfer
//! graph the rankers iterate over.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, RelationEdge, RelationKind};

pub type NodeId = usize;

/// Outgoing mass above `1 + MASS_TOLERANCE` is flagged.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Label of every node in a document graph.
pub const DOCUMENT_LABEL: &str = "Document";

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge endpoint {0} is not a node")]
    InvalidEndpoint(NodeId),
    #[error("duplicate edge {from} -> {to} with role {role:?}")]
    ParallelEdge { from: NodeId, to: NodeId, role: String },
    #[error("schema label {0:?} is not declared")]
    UndeclaredLabel(String),
    #[error("schema already has role {role:?} from {from_label:?} to {to_label:?}")]
    DuplicateRole {
        from_label: String,
        to_label: String,
        role: String,
    },
    #[error("node {node} has label {label:?}, which the schema does not contain")]
    UnknownLabel { node: NodeId, label: String },
    #[error("data edge #{edge} ({from} -> {to}, role {role:?}) has no matching schema edge")]
    UnmappableEdge {
        edge: usize,
        from: NodeId,
        to: NodeId,
        role: String,
    },
    #[error("no transfer rate configured for role {0:?}")]
    MissingRate(String),
    #[error("transfer rate {value} for role {role:?} is outside [0, 1]")]
    RateOutOfRange { role: String, value: f64 },
    #[error("edge weight {0} is negative or not finite")]
    InvalidWeight(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataNode {
    pub id: NodeId,
    pub label: String,
    pub keywords: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DataEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub role: String,
}

/// Labeled directed graph with dense node ids.
#[derive(Debug, Clone, Default)]
pub struct DataGraph {
    nodes: Vec<DataNode>,
    edges: Vec<DataEdge>,
    present: HashSet<DataEdge>,
}

impl DataGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: &str, keywords: BTreeSet<String>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(DataNode {
            id,
            label: label.to_owned(),
            keywords,
        });
        id
    }

    pub fn add_edge(&mut self, from: NodeId, to: NodeId, role: &str) -> Result<(), GraphError> {
        for end in [from, to] {
            if end >= self.nodes.len() {
                return Err(GraphError::InvalidEndpoint(end));
            }
        }
        let edge = DataEdge {
            from,
            to,
            role: role.to_owned(),
        };
        if !self.present.insert(edge.clone()) {
            return Err(GraphError::ParallelEdge {
                from,
                to,
                role: role.to_owned(),
            });
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId, role: &str) -> bool {
        self.present.contains(&DataEdge {
            from,
            to,
            role: role.to_owned(),
        })
    }

    pub fn nodes(&self) -> &[DataNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[DataEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEdge {
    pub from_label: String,
    pub to_label: String,
    pub role: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaGraph {
    labels: BTreeSet<String>,
    edges: Vec<SchemaEdge>,
}

impl SchemaGraph {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SchemaGraph {
            labels: labels.into_iter().map(Into::into).collect(),
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, from_label: &str, to_label: &str, role: &str) -> Result<usize, GraphError> {
        for label in [from_label, to_label] {
            if !self.labels.contains(label) {
                return Err(GraphError::UndeclaredLabel(label.to_owned()));
            }
        }
        if self.find_edge(from_label, to_label, role).is_some() {
            return Err(GraphError::DuplicateRole {
                from_label: from_label.to_owned(),
                to_label: to_label.to_owned(),
                role: role.to_owned(),
            });
        }
        self.edges.push(SchemaEdge {
            from_label: from_label.to_owned(),
            to_label: to_label.to_owned(),
            role: role.to_owned(),
        });
        Ok(self.edges.len() - 1)
    }

    pub fn find_edge(&self, from_label: &str, to_label: &str, role: &str) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| e.from_label == from_label && e.to_label == to_label && e.role == role)
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn edges(&self) -> &[SchemaEdge] {
        &self.edges
    }
}

/// The assignment of data nodes to schema labels and data edges to schema
/// edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformanceMapping {
    pub node_map: Vec<String>,
    /// Index into the schema's edge list, per data edge.
    pub edge_map: Vec<usize>,
}

pub fn check_conformance(data: &DataGraph, schema: &SchemaGraph) -> Result<ConformanceMapping, GraphError> {
    let mut node_map = Vec::with_capacity(data.node_count());
    for node in data.nodes() {
        if !schema.labels().contains(&node.label) {
            return Err(GraphError::UnknownLabel {
                node: node.id,
                label: node.label.clone(),
            });
        }
        node_map.push(node.label.clone());
    }
    let mut lookup: HashMap<(&str, &str, &str), usize> = HashMap::new();
    for (i, e) in schema.edges().iter().enumerate() {
        lookup.insert((&e.from_label, &e.to_label, &e.role), i);
    }
    let mut edge_map = Vec::with_capacity(data.edges().len());
    for (i, e) in data.edges().iter().enumerate() {
        let key = (node_map[e.from].as_str(), node_map[e.to].as_str(), e.role.as_str());
        let schema_edge = lookup.get(&key).ok_or_else(|| GraphError::UnmappableEdge {
            edge: i,
            from: e.from,
            to: e.to,
            role: e.role.clone(),
        })?;
        edge_map.push(*schema_edge);
    }
    Ok(ConformanceMapping { node_map, edge_map })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferRates {
    pub forward: f64,
    pub backward: f64,
}

impl TransferRates {
    pub const fn new(forward: f64, backward: f64) -> Self {
        TransferRates { forward, backward }
    }
}

/// Role → rates.
pub type RateTable = BTreeMap<String, TransferRates>;

/// A schema graph whose every edge carries a forward and a backward
/// authority transfer rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSchemaGraph {
    pub schema: SchemaGraph,
    /// Parallel to `schema.edges()`.
    pub rates: Vec<TransferRates>,
}

pub fn expand_transfer_schema(schema: &SchemaGraph, rates: &RateTable) -> Result<TransferSchemaGraph, GraphError> {
    let mut out = Vec::with_capacity(schema.edges().len());
    for edge in schema.edges() {
        let r = rates
            .get(&edge.role)
            .ok_or_else(|| GraphError::MissingRate(edge.role.clone()))?;
        for value in [r.forward, r.backward] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GraphError::RateOutOfRange {
                    role: edge.role.clone(),
                    value,
                });
            }
        }
        out.push(*r);
    }
    Ok(TransferSchemaGraph {
        schema: schema.clone(),
        rates: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub schema_edge: usize,
    pub direction: Direction,
}

/// Compressed adjacency: edge indices grouped by one endpoint.
#[derive(Debug, Clone, Default, PartialEq)]
struct Adjacency {
    offsets: Vec<usize>,
    edges: Vec<usize>,
}

impl Adjacency {
    fn build(node_count: usize, edges: &[WeightedEdge], key: impl Fn(&WeightedEdge) -> NodeId) -> Self {
        let mut offsets = vec![0usize; node_count + 1];
        for e in edges {
            offsets[key(e) + 1] += 1;
        }
        for i in 0..node_count {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut slots = vec![0usize; edges.len()];
        for (i, e) in edges.iter().enumerate() {
            let k = key(e);
            slots[cursor[k]] = i;
            cursor[k] += 1;
        }
        Adjacency { offsets, edges: slots }
    }

    fn of(&self, node: NodeId) -> &[usize] {
        &self.edges[self.offsets[node]..self.offsets[node + 1]]
    }
}

/// Weighted directed graph `D^A`. `A(i, j)` is the total weight on edges
/// `j -> i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferDataGraph {
    labels: Vec<String>,
    edges: Vec<WeightedEdge>,
    incoming: Adjacency,
    outgoing: Adjacency,
}

impl TransferDataGraph {
    pub fn from_edges(labels: Vec<String>, edges: Vec<WeightedEdge>) -> Result<Self, GraphError> {
        let n = labels.len();
        for e in &edges {
            for end in [e.from, e.to] {
                if end >= n {
                    return Err(GraphError::InvalidEndpoint(end));
                }
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(GraphError::InvalidWeight(e.weight));
            }
        }
        let incoming = Adjacency::build(n, &edges, |e| e.to);
        let outgoing = Adjacency::build(n, &edges, |e| e.from);
        Ok(TransferDataGraph {
            labels,
            edges,
            incoming,
            outgoing,
        })
    }

    /// Unlabeled graph from `(from, to, weight)` triples, all forward on
    /// schema edge 0. Handy for building small graphs directly.
    pub fn from_weights(node_count: usize, weights: &[(NodeId, NodeId, f64)]) -> Result<Self, GraphError> {
        let edges = weights
            .iter()
            .map(|&(from, to, weight)| WeightedEdge {
                from,
                to,
                weight,
                schema_edge: 0,
                direction: Direction::Forward,
            })
            .collect();
        Self::from_edges(vec![DOCUMENT_LABEL.to_owned(); node_count], edges)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    /// Edges arriving at `node`, in edge-list order.
    pub fn incoming(&self, node: NodeId) -> impl Iterator<Item = &WeightedEdge> {
        self.incoming.of(node).iter().map(|&i| &self.edges[i])
    }

    /// Edges leaving `node`, in edge-list order.
    pub fn outgoing(&self, node: NodeId) -> impl Iterator<Item = &WeightedEdge> {
        self.outgoing.of(node).iter().map(|&i| &self.edges[i])
    }

    pub fn in_degree(&self, node: NodeId) -> usize {
        self.incoming.of(node).len()
    }

    pub fn a(&self, i: NodeId, j: NodeId) -> f64 {
        self.incoming(i).filter(|e| e.from == j).map(|e| e.weight).sum()
    }
}

pub fn derive_transfer_data_graph(
    data: &DataGraph,
    transfer: &TransferSchemaGraph,
    mapping: &ConformanceMapping,
) -> TransferDataGraph {
    let mut out_deg: HashMap<(NodeId, usize), usize> = HashMap::new();
    let mut in_deg: HashMap<(NodeId, usize), usize> = HashMap::new();
    for (e, &t) in data.edges().iter().zip(&mapping.edge_map) {
        *out_deg.entry((e.from, t)).or_default() += 1;
        *in_deg.entry((e.to, t)).or_default() += 1;
    }
    let mut edges = Vec::with_capacity(2 * data.edges().len());
    for (e, &t) in data.edges().iter().zip(&mapping.edge_map) {
        let rates = transfer.rates[t];
        edges.push(WeightedEdge {
            from: e.from,
            to: e.to,
            weight: rates.forward / out_deg[&(e.from, t)] as f64,
            schema_edge: t,
            direction: Direction::Forward,
        });
        edges.push(WeightedEdge {
            from: e.to,
            to: e.from,
            weight: rates.backward / in_deg[&(e.to, t)] as f64,
            schema_edge: t,
            direction: Direction::Backward,
        });
    }
    let labels = data.nodes().iter().map(|n| n.label.clone()).collect();
    TransferDataGraph::from_edges(labels, edges).expect("weights derived from validated rates")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMass {
    pub node: NodeId,
    pub outgoing: f64,
    pub exceeds_one: bool,
}

pub fn validate_outgoing_mass(graph: &TransferDataGraph) -> Vec<NodeMass> {
    (0..graph.node_count())
        .map(|node| {
            let outgoing: f64 = graph.outgoing(node).map(|e| e.weight).sum();
            NodeMass {
                node,
                outgoing,
                exceeds_one: outgoing > 1.0 + MASS_TOLERANCE,
            }
        })
        .collect()
}

/// Single-label schema with one self-edge per linking relation kind.
pub fn document_schema() -> SchemaGraph {
    let mut schema = SchemaGraph::new([DOCUMENT_LABEL]);
    for kind in RelationKind::LINKING {
        schema
            .add_edge(DOCUMENT_LABEL, DOCUMENT_LABEL, kind.role())
            .expect("roles are distinct");
    }
    schema
}

/// Default document rate table. Forward and backward rates over all four
/// kinds sum to 0.99, so no node can exceed unit outgoing mass.
pub fn default_document_rates() -> RateTable {
    [
        (RelationKind::Imports, TransferRates::new(0.30, 0.06)),
        (RelationKind::Extends, TransferRates::new(0.18, 0.06)),
        (RelationKind::TermRef, TransferRates::new(0.12, 0.03)),
        (RelationKind::PriorVersion, TransferRates::new(0.06, 0.18)),
    ]
    .into_iter()
    .map(|(k, r)| (k.role().to_owned(), r))
    .collect()
}

/// Data graph of a document corpus; node ids are the documents' positions in
/// `docs`, which must equal their doc ids.
pub fn document_data_graph(docs: &[Document], relations: &[RelationEdge]) -> Result<DataGraph, GraphError> {
    let mut graph = DataGraph::new();
    for doc in docs {
        let id = graph.add_node(DOCUMENT_LABEL, doc.keywords.keys().cloned().collect());
        if id != doc.doc_id {
            return Err(GraphError::InvalidEndpoint(doc.doc_id));
        }
    }
    for r in relations {
        graph.add_edge(r.from_doc, r.to_doc, r.kind.role())?;
    }
    Ok(graph)
}

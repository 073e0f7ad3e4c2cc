//! Versioned on-disk engine state: a JSON manifest plus line-delimited JSON
//! record files. Keys are sorted and floats use shortest round-trip
//! notation, so saving the same state twice yields identical bytes (apart
//! from the manifest's `created_at`).

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{BasicMetadata, DocId, DocKind, RelationEdge, Triple};
use crate::graph::{NodeId, TransferDataGraph, WeightedEdge};
use crate::index::{InvertedIndex, Posting};
use crate::rank::{RankParams, RankVector};

pub const FORMAT_VERSION: u32 = 1;

pub const MANIFEST: &str = "manifest.json";
pub const DOCS: &str = "docs.jsonl";
pub const EDGES: &str = "edges.jsonl";
pub const GRAPH: &str = "graph.jsonl";
pub const RANKS: &str = "ranks.jsonl";
pub const INDEX: &str = "index.jsonl";

const RECORD_FILES: [&str; 5] = [DOCS, EDGES, GRAPH, RANKS, INDEX];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("state format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt record in {file} at line {line}: {reason}")]
    CorruptRecord { file: String, line: usize, reason: String },
    #[error("state file {0} is missing")]
    MissingFile(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

/// One ingested document, minus its triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocRecord {
    pub doc_id: DocId,
    pub uri: String,
    pub path: String,
    pub kind: DocKind,
    pub stats: BasicMetadata,
    pub keywords: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    pub config_fingerprint: String,
    pub docs: Vec<DocRecord>,
    pub relations: Vec<RelationEdge>,
    pub unresolved: usize,
    pub graph: TransferDataGraph,
    /// Present once the ranking stage has run.
    pub ranks: Option<RankVector>,
    pub rank_params: Option<RankParams>,
    pub index: InvertedIndex,
}

impl EngineState {
    pub fn doc(&self, id: DocId) -> Option<&DocRecord> {
        self.docs.get(id).filter(|d| d.doc_id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub iterations_used: usize,
    pub final_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// Seconds since the Unix epoch. Not part of the determinism contract.
    pub created_at: u64,
    pub doc_count: usize,
    pub edge_count: usize,
    pub unresolved: usize,
    pub rank_params: Option<RankParams>,
    pub rank_summary: Option<RankSummary>,
    pub config_fingerprint: String,
    pub record_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum GraphRecord {
    Node { id: NodeId, label: String },
    Edge(WeightedEdge),
}

#[derive(Debug, Serialize, Deserialize)]
struct RankRecord {
    doc_id: DocId,
    score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRecord {
    term: String,
    postings: Vec<Posting>,
}

/// Serializes through `Value`, whose maps are ordered, so keys come out sorted.
fn canonical_line<T: Serialize>(record: &T) -> String {
    let value = serde_json::to_value(record).expect("state records serialize");
    serde_json::to_string(&value).expect("values serialize")
}

fn write_lines(path: &Path, lines: &[String]) -> Result<(), StoreError> {
    let mut out = io::BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    for line in lines {
        out.write_all(line.as_bytes()).map_err(io_err(path))?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn save_state(state: &EngineState, dir: &Path) -> Result<Manifest, StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let docs: Vec<String> = state.docs.iter().map(canonical_line).collect();
    let edges: Vec<String> = state.relations.iter().map(canonical_line).collect();
    let graph: Vec<String> = state
        .graph
        .labels()
        .iter()
        .enumerate()
        .map(|(id, label)| GraphRecord::Node {
            id,
            label: label.clone(),
        })
        .chain(state.graph.edges().iter().cloned().map(GraphRecord::Edge))
        .map(|r| canonical_line(&r))
        .collect();
    let ranks: Vec<String> = state
        .ranks
        .iter()
        .flat_map(|r| r.scores.iter().enumerate())
        .map(|(doc_id, &score)| canonical_line(&RankRecord { doc_id, score }))
        .collect();
    let index: Vec<String> = state
        .index
        .terms()
        .map(|(term, postings)| {
            canonical_line(&IndexRecord {
                term: term.to_owned(),
                postings: postings.to_vec(),
            })
        })
        .collect();

    let files = [
        (DOCS, docs),
        (EDGES, edges),
        (GRAPH, graph),
        (RANKS, ranks),
        (INDEX, index),
    ];
    let mut record_counts = BTreeMap::new();
    for (name, lines) in &files {
        write_lines(&dir.join(name), lines)?;
        record_counts.insert(name.to_string(), lines.len());
    }

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        created_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        doc_count: state.docs.len(),
        edge_count: state.relations.len(),
        unresolved: state.unresolved,
        rank_params: state.rank_params,
        rank_summary: state.ranks.as_ref().map(|r| RankSummary {
            iterations_used: r.iterations_used,
            final_residual: r.final_residual,
        }),
        config_fingerprint: state.config_fingerprint.clone(),
        record_counts,
    };
    let value = serde_json::to_value(&manifest).expect("manifest serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
    text.push('\n');
    let path = dir.join(MANIFEST);
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, StoreError> {
    let path = dir.join(MANIFEST);
    if !path.is_file() {
        return Err(StoreError::MissingFile(MANIFEST.into()));
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| corrupt(MANIFEST, e.line(), e))?;
    let found = raw
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| corrupt(MANIFEST, 1, "format_version missing"))?;
    if found != u64::from(FORMAT_VERSION) {
        return Err(StoreError::VersionMismatch {
            found: found.try_into().unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(raw).map_err(|e| corrupt(MANIFEST, 1, e))
}

fn corrupt(file: &str, line: usize, reason: impl ToString) -> StoreError {
    StoreError::CorruptRecord {
        file: file.to_owned(),
        line,
        reason: reason.to_string(),
    }
}

fn read_records<T: DeserializeOwned>(dir: &Path, name: &str, expected: usize) -> Result<Vec<T>, StoreError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(StoreError::MissingFile(name.into()));
    }
    let reader = BufReader::new(fs::File::open(&path).map_err(io_err(&path))?);
    let mut out = Vec::with_capacity(expected);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        let record = serde_json::from_str(&line).map_err(|e| corrupt(name, i + 1, e))?;
        out.push(record);
    }
    if out.len() != expected {
        return Err(corrupt(
            name,
            out.len().min(expected) + 1,
            format!("manifest expects {expected} records, file has {}", out.len()),
        ));
    }
    Ok(out)
}

pub fn load_state(dir: &Path) -> Result<EngineState, StoreError> {
    let manifest = read_manifest(dir)?;
    let count = |name: &str| manifest.record_counts.get(name).copied().unwrap_or(0);
    for name in RECORD_FILES {
        if !manifest.record_counts.contains_key(name) {
            return Err(corrupt(MANIFEST, 1, format!("no record count for {name}")));
        }
    }

    let docs: Vec<DocRecord> = read_records(dir, DOCS, count(DOCS))?;
    if docs.len() != manifest.doc_count {
        return Err(corrupt(DOCS, docs.len() + 1, "doc_count disagrees with manifest"));
    }
    for (i, d) in docs.iter().enumerate() {
        if d.doc_id != i {
            return Err(corrupt(DOCS, i + 1, "doc ids must be dense and ordered"));
        }
    }
    let relations: Vec<RelationEdge> = read_records(dir, EDGES, count(EDGES))?;
    if relations.len() != manifest.edge_count {
        return Err(corrupt(
            EDGES,
            relations.len() + 1,
            "edge_count disagrees with manifest",
        ));
    }

    let mut labels = Vec::new();
    let mut weighted = Vec::new();
    for (i, record) in read_records::<GraphRecord>(dir, GRAPH, count(GRAPH))?
        .into_iter()
        .enumerate()
    {
        match record {
            GraphRecord::Node { id, label } if id == labels.len() && weighted.is_empty() => labels.push(label),
            GraphRecord::Node { .. } => return Err(corrupt(GRAPH, i + 1, "node record out of order")),
            GraphRecord::Edge(e) => weighted.push(e),
        }
    }
    let graph = TransferDataGraph::from_edges(labels, weighted).map_err(|e| corrupt(GRAPH, 0, e))?;

    let rank_records: Vec<RankRecord> = read_records(dir, RANKS, count(RANKS))?;
    let ranks = match (&manifest.rank_summary, rank_records.is_empty()) {
        (Some(summary), _) => {
            for (i, r) in rank_records.iter().enumerate() {
                if r.doc_id != i || !r.score.is_finite() {
                    return Err(corrupt(RANKS, i + 1, "rank records must be dense, ordered and finite"));
                }
            }
            Some(RankVector {
                scores: rank_records.into_iter().map(|r| r.score).collect(),
                iterations_used: summary.iterations_used,
                final_residual: summary.final_residual,
            })
        }
        (None, true) => None,
        (None, false) => return Err(corrupt(RANKS, 1, "ranks present without a rank summary")),
    };

    let index_records: Vec<IndexRecord> = read_records(dir, INDEX, count(INDEX))?;
    let postings = index_records.into_iter().map(|r| (r.term, r.postings)).collect();

    Ok(EngineState {
        config_fingerprint: manifest.config_fingerprint,
        docs,
        relations,
        unresolved: manifest.unresolved,
        graph,
        ranks,
        rank_params: manifest.rank_params,
        index: InvertedIndex::from_postings(postings),
    })
}

/// Writes a document in the line format the corpus parser reads, headed by
/// its `# uri:` comment.
pub fn write_document_nt(uri: &str, triples: &[Triple]) -> String {
    let mut out = format!("# uri: <{uri}>\n");
    for t in triples {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

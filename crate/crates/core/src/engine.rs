//! Pipeline orchestration: ingest a directory of documents, build ranks and
//! the keyword index, answer queries, benchmark the query stage, and report
//! on single documents.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, EngineConfig, QuerySettings};
use crate::corpus::{link_corpus, parse_document, uri_from_header, CorpusError, DocId, Document, RelationKind};
use crate::graph::{
    check_conformance, derive_transfer_data_graph, document_data_graph, document_schema, expand_transfer_schema,
    GraphError, TransferDataGraph,
};
use crate::hits::{build_subgraph, hits, top_ranked, HitsError, SubGraph};
use crate::index::{build_index, tokenize, top_n, IndexError, TokenizerConfig};
use crate::rank::{compute_objectrank, InitMode, RankError, RankParams};
use crate::store::{DocRecord, EngineState, StoreError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("state has not been built yet; run the build step first")]
    NotBuilt,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    InvalidArgument(String),
}

impl EngineError {
    /// 1 for user and query errors, 2 for unreadable state, 3 when the
    /// ranking stage refuses or fails to converge.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Store(StoreError::IoFailure { .. }) => 1,
            EngineError::Store(_) => 2,
            EngineError::Rank(RankError::NotConverged { .. } | RankError::MassExceedsOne(_)) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug)]
pub struct IngestFailure {
    pub path: PathBuf,
    pub error: CorpusError,
}

#[derive(Debug, Serialize)]
pub struct IngestSummary {
    pub docs: usize,
    pub relation_edges: usize,
    pub unresolved: usize,
    pub weighted_edges: usize,
    pub kinds: BTreeMap<String, usize>,
    pub relations: BTreeMap<String, usize>,
    #[serde(skip)]
    pub failures: Vec<IngestFailure>,
}

fn collect_nt_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), EngineError> {
    let entries = fs::read_dir(dir).map_err(|source| EngineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let path = entry
            .map_err(|source| EngineError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        if path.is_dir() {
            collect_nt_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "nt") {
            out.push(path);
        }
    }
    Ok(())
}

/// Builds documents, relation edges and the transfer data graph from
/// already-parsed documents. Ids must be dense and match positions.
pub fn assemble_state(
    docs: &[Document],
    paths: &[String],
    config: &EngineConfig,
) -> Result<(EngineState, IngestSummary), EngineError> {
    let mut linkage = link_corpus(docs);
    linkage.edges.sort_by_key(|e| (e.from_doc, e.to_doc, e.kind));
    let data = document_data_graph(docs, &linkage.edges)?;
    let schema = document_schema();
    let mapping = check_conformance(&data, &schema)?;
    let transfer = expand_transfer_schema(&schema, &config.rates)?;
    let graph = derive_transfer_data_graph(&data, &transfer, &mapping);

    let mut kinds = BTreeMap::new();
    for d in docs {
        *kinds.entry(d.kind.to_string()).or_insert(0) += 1;
    }
    let mut relations = BTreeMap::new();
    for e in &linkage.edges {
        *relations.entry(e.kind.code().to_string()).or_insert(0) += 1;
    }
    let summary = IngestSummary {
        docs: docs.len(),
        relation_edges: linkage.edges.len(),
        unresolved: linkage.unresolved,
        weighted_edges: graph.edges().len(),
        kinds,
        relations,
        failures: Vec::new(),
    };
    let records = docs
        .iter()
        .zip(paths)
        .map(|(d, path)| DocRecord {
            doc_id: d.doc_id,
            uri: d.uri.clone(),
            path: path.clone(),
            kind: d.kind,
            stats: d.stats.clone(),
            keywords: d.keywords.clone(),
        })
        .collect();
    let state = EngineState {
        config_fingerprint: config.fingerprint(),
        docs: records,
        relations: linkage.edges,
        unresolved: linkage.unresolved,
        graph,
        ranks: None,
        rank_params: None,
        index: Default::default(),
    };
    Ok((state, summary))
}

/// Parses every `.nt` file under `dir` (sorted by path). Files that fail to
/// parse are reported in the summary and skipped; the rest get dense ids in
/// path order.
pub fn ingest_dir(dir: &Path, config: &EngineConfig) -> Result<(EngineState, IngestSummary), EngineError> {
    let mut files = Vec::new();
    collect_nt_files(dir, &mut files)?;
    files.sort();

    let mut docs = Vec::new();
    let mut paths = Vec::new();
    let mut failures = Vec::new();
    for path in files {
        let source = fs::read_to_string(&path).map_err(|source| EngineError::Io {
            path: path.clone(),
            source,
        })?;
        let relative = path.strip_prefix(dir).unwrap_or(&path);
        let uri = uri_from_header(&source).unwrap_or_else(|| format!("file://{}", path.display()));
        match parse_document(&source, &uri, docs.len(), &config.tokenizer) {
            Ok(doc) => {
                docs.push(doc);
                paths.push(relative.display().to_string());
            }
            Err(error) => failures.push(IngestFailure { path, error }),
        }
    }
    let (state, mut summary) = assemble_state(&docs, &paths, config)?;
    summary.failures = failures;
    Ok((state, summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildSummary {
    pub init: InitMode,
    pub iterations_used: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub indexed_terms: usize,
}

/// Runs the offline ranking and rebuilds the keyword index. A
/// non-converged run is kept only when `allow_unconverged` is set.
pub fn build(
    state: &mut EngineState,
    params: &RankParams,
    allow_unconverged: bool,
) -> Result<BuildSummary, EngineError> {
    let (ranks, converged) = match compute_objectrank(&state.graph, params) {
        Ok(r) => (r, true),
        Err(RankError::NotConverged { best, .. }) if allow_unconverged => (*best, false),
        Err(e) => return Err(e.into()),
    };
    let index = build_index(state.docs.iter().map(|d| (d.doc_id, &d.keywords)), &ranks.scores)?;
    let summary = BuildSummary {
        init: params.init,
        iterations_used: ranks.iterations_used,
        final_residual: ranks.final_residual,
        converged,
        indexed_terms: index.term_count(),
    };
    state.ranks = Some(ranks);
    state.rank_params = Some(*params);
    state.index = index;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct InitComparison {
    pub uniform_iterations: usize,
    pub inratio_iterations: usize,
    /// Largest per-node difference between the two converged vectors.
    pub max_score_gap: f64,
}

impl InitComparison {
    pub fn ratio(&self) -> f64 {
        self.inratio_iterations as f64 / self.uniform_iterations as f64
    }
}

pub fn compare_inits(graph: &TransferDataGraph, params: &RankParams) -> Result<InitComparison, RankError> {
    let uniform = compute_objectrank(
        graph,
        &RankParams {
            init: InitMode::Uniform,
            ..*params
        },
    )?;
    let inratio = compute_objectrank(
        graph,
        &RankParams {
            init: InitMode::InRatio,
            ..*params
        },
    )?;
    let max_score_gap = uniform
        .scores
        .iter()
        .zip(&inratio.scores)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(InitComparison {
        uniform_iterations: uniform.iterations_used,
        inratio_iterations: inratio.iterations_used,
        max_score_gap,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub seed_lookup_us: u64,
    pub subgraph_us: u64,
    pub hits_us: u64,
    pub total_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedDoc {
    pub doc_id: DocId,
    pub uri: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub query_terms: Vec<String>,
    pub seeds: Vec<DocId>,
    pub subgraph_nodes: usize,
    pub subgraph_edges: usize,
    /// Set when the sub-graph had no usable edges; `authorities` then lists
    /// the seeds by their offline score and `hubs` is empty.
    pub degenerate: bool,
    pub hits_iterations: usize,
    pub authorities: Vec<RankedDoc>,
    pub hubs: Vec<RankedDoc>,
    pub timings: Timings,
}

impl QueryResult {
    /// Single-line JSON. With `timings` false the timing block is zeroed, so
    /// equal queries on equal state render identically.
    pub fn to_json(&self, timings: bool) -> String {
        let mut copy = self.clone();
        if !timings {
            copy.timings = Timings::default();
        }
        let value = serde_json::to_value(&copy).expect("query results serialize");
        serde_json::to_string(&value).expect("values serialize")
    }
}

impl fmt::Display for QueryResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "query: {}", self.query_terms.join(" "))?;
        writeln!(f, "seeds: {:?}", self.seeds)?;
        writeln!(
            f,
            "sub-graph: {} nodes, {} edges",
            self.subgraph_nodes, self.subgraph_edges
        )?;
        if self.degenerate {
            writeln!(f, "notice: sub-graph has no links; showing seeds by offline score")?;
        }
        for (title, list) in [("authorities", &self.authorities), ("hubs", &self.hubs)] {
            if self.degenerate && list.is_empty() {
                continue;
            }
            writeln!(f, "\n{title}:")?;
            writeln!(f, "{:>4}  {:>6}  {:>12}  uri", "rank", "doc", "weight")?;
            for (i, r) in list.iter().enumerate() {
                writeln!(f, "{:>4}  {:>6}  {:>12.8}  {}", i + 1, r.doc_id, r.weight, r.uri)?;
            }
        }
        write!(
            f,
            "\ntimings (us): seeds {} / sub-graph {} / hits {} / total {}",
            self.timings.seed_lookup_us, self.timings.subgraph_us, self.timings.hits_us, self.timings.total_us
        )
    }
}

fn elapsed_us(start: Instant) -> u64 {
    start.elapsed().as_micros().try_into().unwrap_or(u64::MAX)
}

fn ranks_of(state: &EngineState) -> Result<&[f64], EngineError> {
    state
        .ranks
        .as_ref()
        .map(|r| r.scores.as_slice())
        .ok_or(EngineError::NotBuilt)
}

/// Answers a keyword query: top-n seeds, bounded sub-graph, HITS, and the
/// two result lists.
pub fn query(
    state: &EngineState,
    text: &str,
    tokenizer: &TokenizerConfig,
    settings: &QuerySettings,
) -> Result<QueryResult, EngineError> {
    if settings.n == 0 || settings.top_k == 0 {
        return Err(EngineError::InvalidArgument("n and top_k must be at least 1".into()));
    }
    let ranks = ranks_of(state)?;
    let total = Instant::now();
    let terms = tokenize(text, tokenizer);

    let t = Instant::now();
    let seeds = top_n(&state.index, &terms, settings.n)?;
    let seed_lookup_us = elapsed_us(t);

    let t = Instant::now();
    let sub = build_subgraph(&state.graph, ranks, &seeds, settings.c);
    let subgraph_us = elapsed_us(t);

    let uri = |id: DocId| state.doc(id).map(|d| d.uri.clone()).unwrap_or_default();
    let t = Instant::now();
    let (degenerate, hits_iterations, authorities, hubs) = match hits(&sub, &settings.subgraph_params()) {
        Ok(scores) => {
            let to_docs = |weights: &[f64]| {
                top_ranked(&scores.nodes, weights, settings.top_k)
                    .into_iter()
                    .map(|r| RankedDoc {
                        doc_id: r.doc_id,
                        uri: uri(r.doc_id),
                        weight: r.weight,
                    })
                    .collect::<Vec<_>>()
            };
            (
                false,
                scores.iterations_used,
                to_docs(&scores.authority),
                to_docs(&scores.hub),
            )
        }
        Err(HitsError::DegenerateSubGraph) => {
            let fallback = seeds
                .iter()
                .take(settings.top_k)
                .map(|&id| RankedDoc {
                    doc_id: id,
                    uri: uri(id),
                    weight: ranks[id],
                })
                .collect();
            (true, 0, fallback, Vec::new())
        }
    };
    let hits_us = elapsed_us(t);

    Ok(QueryResult {
        query_terms: terms,
        seeds,
        subgraph_nodes: sub.nodes.len(),
        subgraph_edges: sub.edges.len(),
        degenerate,
        hits_iterations,
        authorities,
        hubs,
        timings: Timings {
            seed_lookup_us,
            subgraph_us,
            hits_us,
            total_us: elapsed_us(total),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchGrid {
    pub n: Vec<usize>,
    pub c: Vec<usize>,
}

impl Default for BenchGrid {
    fn default() -> Self {
        BenchGrid {
            n: vec![5, 10, 20, 40],
            c: vec![1, 2, 3, 5, 8, 13],
        }
    }
}

impl std::str::FromStr for BenchGrid {
    type Err = String;

    /// `n=5,10;c=0,1,2`. Either part may be omitted to keep its default.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut grid = BenchGrid::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=values in {part:?}"))?;
            let parsed = values
                .split(',')
                .map(|v| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            match key.trim() {
                "n" if parsed.iter().all(|&n| n > 0) => grid.n = parsed,
                "n" => return Err("n values must be at least 1".into()),
                "c" => grid.c = parsed,
                other => return Err(format!("unknown grid key {other:?}")),
            }
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub grid: BenchGrid,
    pub reps: usize,
    /// Single-term queries; defaults to the most frequent indexed terms.
    pub terms: Option<Vec<String>>,
    pub settings: QuerySettings,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            grid: BenchGrid::default(),
            reps: 3,
            terms: None,
            settings: QuerySettings::default(),
        }
    }
}

pub const DEFAULT_BENCH_TERMS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub c: usize,
    pub subgraph_nodes: f64,
    pub build_us: f64,
    pub hits_us: f64,
    pub total_us: f64,
    /// Mean fraction of the top-k authorities shared with HITS over the
    /// whole graph.
    pub overlap_at_k: f64,
}

pub const BENCH_CSV_HEADER: &str = "n,c,subgraph_nodes,build_us,hits_us,total_us,overlap_at_k";

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.3},{:.3},{:.3},{:.3},{:.6}",
            r.n, r.c, r.subgraph_nodes, r.build_us, r.hits_us, r.total_us, r.overlap_at_k
        );
    }
    out
}

/// Times the query stage over every (n, c) cell of the grid.
pub fn bench(state: &EngineState, options: &BenchOptions) -> Result<Vec<BenchRow>, EngineError> {
    let ranks = ranks_of(state)?;
    let k = options.settings.top_k.max(1);
    let reps = options.reps.max(1);
    let params = options.settings.subgraph_params();
    let terms = options
        .terms
        .clone()
        .unwrap_or_else(|| state.index.most_frequent_terms(DEFAULT_BENCH_TERMS));

    // Reference list: top-k authorities of HITS over the whole graph.
    let whole = SubGraph::whole(&state.graph);
    let reference: HashSet<DocId> = match hits(&whole, &params) {
        Ok(s) => top_ranked(&s.nodes, &s.authority, k)
            .into_iter()
            .map(|r| r.doc_id)
            .collect(),
        Err(HitsError::DegenerateSubGraph) => HashSet::new(),
    };

    let mut rows = Vec::new();
    for &n in &options.grid.n {
        for &c in &options.grid.c {
            let mut nodes = 0.0;
            let mut build_us = 0.0;
            let mut hits_us = 0.0;
            let mut total_us = 0.0;
            let mut overlap = 0.0;
            let mut samples = 0usize;
            let mut queries = 0usize;
            for term in &terms {
                let Ok(seeds) = top_n(&state.index, std::slice::from_ref(term), n) else {
                    continue;
                };
                queries += 1;
                for rep in 0..reps {
                    let start = Instant::now();
                    let sub = build_subgraph(&state.graph, ranks, &seeds, c);
                    let built = Instant::now();
                    let authorities: Vec<DocId> = match hits(&sub, &params) {
                        Ok(s) => top_ranked(&s.nodes, &s.authority, k)
                            .into_iter()
                            .map(|r| r.doc_id)
                            .collect(),
                        Err(HitsError::DegenerateSubGraph) => seeds.iter().copied().take(k).collect(),
                    };
                    let done = Instant::now();
                    build_us += (built - start).as_secs_f64() * 1e6;
                    hits_us += (done - built).as_secs_f64() * 1e6;
                    total_us += (done - start).as_secs_f64() * 1e6;
                    samples += 1;
                    if rep == 0 {
                        nodes += sub.nodes.len() as f64;
                        let shared = authorities.iter().filter(|id| reference.contains(id)).count();
                        overlap += shared as f64 / k as f64;
                    }
                }
            }
            let per_query = queries.max(1) as f64;
            let per_sample = samples.max(1) as f64;
            rows.push(BenchRow {
                n,
                c,
                subgraph_nodes: nodes / per_query,
                build_us: build_us / per_sample,
                hits_us: hits_us / per_sample,
                total_us: total_us / per_sample,
                overlap_at_k: overlap / per_query,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct DocReport {
    pub doc: DocRecord,
    pub score: Option<f64>,
    /// Relation code → neighbor ids.
    pub out_edges: BTreeMap<String, Vec<DocId>>,
    pub in_edges: BTreeMap<String, Vec<DocId>>,
    pub keyword_sample: Vec<(String, u32)>,
}

const KEYWORD_SAMPLE: usize = 10;

/// Looks a document up by numeric id or by URI.
pub fn inspect(state: &EngineState, key: &str) -> Result<DocReport, EngineError> {
    let doc = key
        .parse::<DocId>()
        .ok()
        .and_then(|id| state.doc(id))
        .or_else(|| state.docs.iter().find(|d| d.uri == key))
        .ok_or_else(|| EngineError::UnknownDocument(key.to_owned()))?;
    let mut out_edges: BTreeMap<String, Vec<DocId>> = BTreeMap::new();
    let mut in_edges: BTreeMap<String, Vec<DocId>> = BTreeMap::new();
    for e in &state.relations {
        if e.from_doc == doc.doc_id {
            out_edges.entry(e.kind.code().into()).or_default().push(e.to_doc);
        }
        if e.to_doc == doc.doc_id {
            in_edges.entry(e.kind.code().into()).or_default().push(e.from_doc);
        }
    }
    let mut keyword_sample: Vec<(String, u32)> = doc.keywords.iter().map(|(k, v)| (k.clone(), *v)).collect();
    keyword_sample.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    keyword_sample.truncate(KEYWORD_SAMPLE);
    Ok(DocReport {
        doc: doc.clone(),
        score: state.ranks.as_ref().map(|r| r.scores[doc.doc_id]),
        out_edges,
        in_edges,
        keyword_sample,
    })
}

impl fmt::Display for DocReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.doc;
        writeln!(f, "doc {}  {}", d.doc_id, d.uri)?;
        writeln!(f, "path: {}", d.path)?;
        writeln!(f, "kind: {}", d.kind)?;
        writeln!(
            f,
            "metadata: {} triples, {} class defs, {} property defs, {} individuals, ontology annotation {}, language {:?}",
            d.stats.triple_count,
            d.stats.class_defs,
            d.stats.property_defs,
            d.stats.individual_count,
            if d.stats.has_ontology_annotation { "yes" } else { "no" },
            d.stats.language_tag,
        )?;
        match self.score {
            Some(s) => writeln!(f, "score: {s:.10}")?,
            None => writeln!(f, "score: (not built)")?,
        }
        let codes: BTreeSet<&str> = RelationKind::LINKING.iter().map(|k| k.code()).collect();
        for (title, edges) in [("out", &self.out_edges), ("in", &self.in_edges)] {
            writeln!(f, "{title} edges:")?;
            for code in &codes {
                if let Some(ids) = edges.get(*code) {
                    writeln!(f, "  {code:<5} {ids:?}")?;
                }
            }
        }
        let sample: Vec<String> = self.keyword_sample.iter().map(|(k, c)| format!("{k}:{c}")).collect();
        write!(f, "keywords: {}", sample.join(" "))
    }
}

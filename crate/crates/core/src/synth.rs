//! Seeded synthetic inputs: power-law document graphs and whole document
//! corpora for benchmarks and tests.

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{RelationKind, Triple};
use crate::graph::{
    check_conformance, default_document_rates, derive_transfer_data_graph, document_schema, expand_transfer_schema,
    DataGraph, GraphError, RateTable, TransferDataGraph, DOCUMENT_LABEL,
};
use crate::store::write_document_nt;
use crate::vocab::{OWL, RDF, RDFS};

/// Seeds of the ten graphs in the shipped iteration-count suite.
pub const SUITE_SEEDS: [u64; 10] = [11, 23, 37, 41, 53, 67, 79, 83, 97, 101];
pub const SUITE_NODES: usize = 1000;

const ROLE_WEIGHTS: [(RelationKind, u32); 4] = [
    (RelationKind::Extends, 4),
    (RelationKind::Imports, 3),
    (RelationKind::TermRef, 2),
    (RelationKind::PriorVersion, 1),
];

const OUT_DEGREES: [usize; 8] = [1, 1, 1, 2, 2, 3, 4, 6];

/// Preferential attachment: node `i` links to earlier nodes chosen with
/// probability proportional to in-degree + 1.
struct Attachment {
    pool: Vec<usize>,
    roles: WeightedIndex<u32>,
}

impl Attachment {
    fn new() -> Self {
        Attachment {
            pool: Vec::new(),
            roles: WeightedIndex::new(ROLE_WEIGHTS.iter().map(|(_, w)| *w)).expect("positive weights"),
        }
    }

    /// Links for the next node, as `(target, kind)` pairs without repeats.
    fn links(&mut self, node: usize, rng: &mut impl Rng) -> Vec<(usize, RelationKind)> {
        let mut out = Vec::new();
        if node > 0 {
            let wanted = *OUT_DEGREES.choose(rng).expect("non-empty");
            for _ in 0..wanted {
                let target = self.pool[rng.gen_range(0..self.pool.len())];
                let kind = ROLE_WEIGHTS[self.roles.sample(rng)].0;
                if !out.contains(&(target, kind)) {
                    out.push((target, kind));
                }
            }
        }
        for &(target, _) in &out {
            self.pool.push(target);
        }
        self.pool.push(node);
        out
    }
}

pub fn power_law_graph(nodes: usize, seed: u64) -> DataGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = DataGraph::new();
    let mut attach = Attachment::new();
    for i in 0..nodes {
        graph.add_node(DOCUMENT_LABEL, BTreeSet::new());
        for (target, kind) in attach.links(i, &mut rng) {
            graph.add_edge(i, target, kind.role()).expect("links are deduplicated");
        }
    }
    graph
}

/// Derives the weighted graph of a single-label document graph.
pub fn transfer_graph(data: &DataGraph, rates: &RateTable) -> Result<TransferDataGraph, GraphError> {
    let schema = document_schema();
    let mapping = check_conformance(data, &schema)?;
    let transfer = expand_transfer_schema(&schema, rates)?;
    Ok(derive_transfer_data_graph(data, &transfer, &mapping))
}

/// The ten power-law graphs of [`SUITE_SEEDS`] under the default rates.
pub fn synthetic_suite() -> Vec<TransferDataGraph> {
    SUITE_SEEDS
        .iter()
        .map(|&seed| {
            transfer_graph(&power_law_graph(SUITE_NODES, seed), &default_document_rates())
                .expect("default rates cover every role")
        })
        .collect()
}

const VOCABULARY: [&str; 64] = [
    "ranking",
    "semantic",
    "ontology",
    "search",
    "query",
    "index",
    "graph",
    "document",
    "metadata",
    "authority",
    "hub",
    "link",
    "crawler",
    "resource",
    "class",
    "property",
    "instance",
    "schema",
    "vocabulary",
    "reasoning",
    "inference",
    "triple",
    "store",
    "keyword",
    "relevance",
    "retrieval",
    "web",
    "agent",
    "service",
    "annotation",
    "person",
    "project",
    "publication",
    "conference",
    "university",
    "course",
    "library",
    "museum",
    "music",
    "gene",
    "protein",
    "disease",
    "drug",
    "city",
    "country",
    "river",
    "mountain",
    "vehicle",
    "product",
    "price",
    "event",
    "calendar",
    "sensor",
    "device",
    "network",
    "policy",
    "license",
    "dataset",
    "catalog",
    "thesaurus",
    "taxonomy",
    "species",
    "language",
    "version",
];

pub struct SyntheticDoc {
    pub file_name: String,
    pub uri: String,
    pub source: String,
}

fn doc_uri(i: usize) -> String {
    format!("http://synth.example.org/onto/d{i:04}")
}

/// A corpus of `docs` documents with power-law linking and Zipf-distributed
/// vocabulary.
pub fn synthetic_corpus(docs: usize, seed: u64) -> Vec<SyntheticDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = WeightedIndex::new((1..=VOCABULARY.len()).map(|r| 1.0 / r as f64)).expect("positive weights");
    let mut attach = Attachment::new();
    let rdf_type = format!("{RDF}type");
    let label = format!("{RDFS}label");
    let comment = format!("{RDFS}comment");
    let owl_class = format!("{OWL}Class");
    let mut class_counts = Vec::with_capacity(docs);
    let mut out = Vec::with_capacity(docs);

    for i in 0..docs {
        let uri = doc_uri(i);
        let classes = rng.gen_range(2..=5);
        class_counts.push(classes);
        let words = |rng: &mut ChaCha8Rng, n: usize| {
            (0..n)
                .map(|_| VOCABULARY[zipf.sample(rng)])
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut triples = vec![Triple::iri(&uri, &rdf_type, &format!("{OWL}Ontology"))];
        triples.push(Triple::literal(&uri, &comment, &words(&mut rng, 4)));
        for j in 0..classes {
            let class = format!("{uri}#C{j}");
            triples.push(Triple::iri(&class, &rdf_type, &owl_class));
            triples.push(Triple::literal(&class, &label, &words(&mut rng, 2)));
        }
        if i % 3 == 0 {
            for j in 0..rng.gen_range(1..=3) {
                let individual = format!("{uri}#item{j}");
                triples.push(Triple::iri(&individual, &rdf_type, &format!("{uri}#C0")));
                triples.push(Triple::literal(&individual, &comment, &words(&mut rng, 3)));
            }
        }
        for (target, kind) in attach.links(i, &mut rng) {
            let target_uri = doc_uri(target);
            let local = format!("{uri}#C{}", rng.gen_range(0..classes));
            let remote = format!("{target_uri}#C{}", rng.gen_range(0..class_counts[target]));
            triples.push(match kind {
                RelationKind::Imports => Triple::iri(&uri, &format!("{OWL}imports"), &target_uri),
                RelationKind::PriorVersion => Triple::iri(&uri, &format!("{OWL}priorVersion"), &target_uri),
                RelationKind::Extends => Triple::iri(&local, &format!("{RDFS}subClassOf"), &remote),
                _ => Triple::iri(&local, &format!("{OWL}termRef"), &remote),
            });
        }
        out.push(SyntheticDoc {
            file_name: format!("d{i:04}.nt"),
            source: write_document_nt(&uri, &triples),
            uri,
        });
    }
    out
}

/// Writes [`synthetic_corpus`] into `dir`, one file per document.
pub fn write_corpus(dir: &Path, docs: usize, seed: u64) -> io::Result<usize> {
    std::fs::create_dir_all(dir)?;
    let corpus = synthetic_corpus(docs, seed);
    for doc in &corpus {
        std::fs::write(dir.join(&doc.file_name), &doc.source)?;
    }
    Ok(corpus.len())
}

//! Ranking engine for semantic web documents.
//!
//! Offline, documents are parsed, linked by their inter-document relations
//! (imports, extensions, term references, prior versions), and scored by
//! authority flow over a typed transfer graph. Online, a keyword query picks
//! the best-scored matching documents, grows a small sub-graph around them,
//! and runs HITS to return an authority list and a hub list.

pub mod config;
pub mod corpus;
pub mod engine;
pub mod graph;
pub mod hits;
pub mod index;
pub mod rank;
pub mod store;
pub mod synth;
pub mod vocab;

pub use config::{EngineConfig, QuerySettings};
pub use corpus::{classify_document, classify_relation, parse_document, DocId, DocKind, Document, RelationKind};
pub use engine::{EngineError, QueryResult};
pub use graph::{NodeId, TransferDataGraph};
pub use hits::{build_subgraph, dual_lists, hits, oracle_hits, HitsScores, SubGraph, SubGraphParams};
pub use index::{tokenize, top_n, InvertedIndex, TokenizerConfig};
pub use rank::{compute_objectrank, oracle_rank, InitMode, RankParams, RankVector};
pub use store::{load_state, save_state, EngineState};

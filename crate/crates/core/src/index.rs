//! Tokenizer and the keyword → rank-ordered postings index.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocId;

pub const DEFAULT_STOPWORDS: [&str; 30] = [
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "he", "in", "is", "it", "its", "not",
    "of", "on", "or", "that", "the", "this", "to", "was", "were", "which", "will", "with",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("document {0} has keywords but no rank score")]
    MissingScore(DocId),
    #[error("no indexed document matches the query")]
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub min_length: usize,
    pub stopwords: BTreeSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            min_length: 2,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Splits on non-alphanumeric characters. Order and duplicates are kept.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|raw| !raw.is_empty() && raw.chars().count() >= config.min_length.max(1))
        .filter(|raw| !config.stopwords.contains(&raw.to_lowercase()))
        .map(|raw| {
            if config.lowercase {
                raw.to_lowercase()
            } else {
                raw.to_owned()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_id: DocId,
    pub score: f64,
}

/// Score descending, then doc id ascending.
pub fn rank_order(a: &Posting, b: &Posting) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<Posting>>,
}

impl InvertedIndex {
    /// Rebuilds an index from stored posting lists, re-sorting each list.
    pub fn from_postings(postings: BTreeMap<String, Vec<Posting>>) -> Self {
        let mut postings = postings;
        for list in postings.values_mut() {
            list.sort_by(rank_order);
        }
        InvertedIndex { postings }
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn score(&self, term: &str, doc_id: DocId) -> Option<f64> {
        self.postings(term)?
            .iter()
            .find(|p| p.doc_id == doc_id)
            .map(|p| p.score)
    }

    /// Terms with the longest posting lists, ties by term.
    pub fn most_frequent_terms(&self, k: usize) -> Vec<String> {
        let mut terms: Vec<(&String, usize)> = self.postings.iter().map(|(t, p)| (t, p.len())).collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        terms.into_iter().take(k).map(|(t, _)| t.clone()).collect()
    }
}

pub fn build_index<'a, I>(bags: I, scores: &[f64]) -> Result<InvertedIndex, IndexError>
where
    I: IntoIterator<Item = (DocId, &'a BTreeMap<String, u32>)>,
{
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    for (doc_id, bag) in bags {
        if bag.is_empty() {
            continue;
        }
        let score = *scores.get(doc_id).ok_or(IndexError::MissingScore(doc_id))?;
        for term in bag.keys() {
            postings
                .entry(term.clone())
                .or_default()
                .push(Posting { doc_id, score });
        }
    }
    Ok(InvertedIndex::from_postings(postings))
}

/// Top-`n` seed documents for a tokenized query: documents containing every
/// term, or when none do and there are several terms, any term.
pub fn top_n(index: &InvertedIndex, terms: &[String], n: usize) -> Result<Vec<DocId>, IndexError> {
    let mut unique: Vec<&str> = Vec::new();
    for t in terms {
        if !unique.contains(&t.as_str()) {
            unique.push(t);
        }
    }
    let lists: Vec<&[Posting]> = unique.iter().map(|t| index.postings(t).unwrap_or(&[])).collect();
    let Some((first, rest)) = lists.split_first() else {
        return Err(IndexError::NoMatch);
    };

    let mut candidates: Vec<Posting> = first
        .iter()
        .filter(|p| rest.iter().all(|list| list.iter().any(|q| q.doc_id == p.doc_id)))
        .copied()
        .collect();
    if candidates.is_empty() && lists.len() > 1 {
        let mut seen = HashSet::new();
        candidates = lists
            .iter()
            .flat_map(|list| list.iter())
            .filter(|p| seen.insert(p.doc_id))
            .copied()
            .collect();
    }
    if candidates.is_empty() {
        return Err(IndexError::NoMatch);
    }
    candidates.sort_by(rank_order);
    Ok(candidates.into_iter().take(n).map(|p| p.doc_id).collect())
}

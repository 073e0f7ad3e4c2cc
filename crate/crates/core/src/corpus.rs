//! Document model: a line-oriented triple parser, relation and document
//! classification, keyword extraction, and cross-document linking.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{tokenize, TokenizerConfig};
use crate::vocab;

pub type DocId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("malformed statement on line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("document id {0} is already used in this corpus")]
    DuplicateId(DocId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Object {
    Iri(String),
    Literal(String),
}

impl Object {
    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Object::Iri(iri) => Some(iri),
            Object::Literal(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Object,
}

impl Triple {
    pub fn iri(subject: &str, predicate: &str, object: &str) -> Self {
        Triple {
            subject: subject.to_owned(),
            predicate: predicate.to_owned(),
            object: Object::Iri(object.to_owned()),
        }
    }

    pub fn literal(subject: &str, predicate: &str, value: &str) -> Self {
        Triple {
            subject: subject.to_owned(),
            predicate: predicate.to_owned(),
            object: Object::Literal(value.to_owned()),
        }
    }
}

/// Writes one statement in the same line format the parser reads.
impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> <{}> ", self.subject, self.predicate)?;
        match &self.object {
            Object::Iri(iri) => write!(f, "<{iri}>")?,
            Object::Literal(value) => {
                f.write_str("\"")?;
                for c in value.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
            }
        }
        f.write_str(" .")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DocKind {
    /// Defines terms only (an ontology).
    #[serde(rename = "SWO")]
    Swo,
    /// Asserts individuals only, or nothing at all.
    #[serde(rename = "SWDB")]
    Swdb,
    Hybrid,
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocKind::Swo => "SWO",
            DocKind::Swdb => "SWDB",
            DocKind::Hybrid => "Hybrid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    TermRef,
    Imports,
    Extends,
    PriorVersion,
    None,
}

impl RelationKind {
    /// Every kind that produces an edge.
    pub const LINKING: [RelationKind; 4] = [
        RelationKind::TermRef,
        RelationKind::Imports,
        RelationKind::Extends,
        RelationKind::PriorVersion,
    ];

    /// Role label used on data and schema graph edges.
    pub fn role(self) -> &'static str {
        match self {
            RelationKind::TermRef => "termref",
            RelationKind::Imports => "imports",
            RelationKind::Extends => "extends",
            RelationKind::PriorVersion => "priorversion",
            RelationKind::None => "none",
        }
    }

    pub fn from_role(role: &str) -> Option<Self> {
        Self::LINKING.into_iter().find(|k| k.role() == role)
    }

    /// Short category code: TM/IN, IM, EX, PV.
    pub fn code(self) -> &'static str {
        match self {
            RelationKind::TermRef => "TM/IN",
            RelationKind::Imports => "IM",
            RelationKind::Extends => "EX",
            RelationKind::PriorVersion => "PV",
            RelationKind::None => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LanguageTag {
    Rdf,
    Rdfs,
    Owl,
    Daml,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicMetadata {
    pub triple_count: usize,
    pub class_defs: usize,
    pub property_defs: usize,
    pub individual_count: usize,
    pub has_ontology_annotation: bool,
    pub language_tag: LanguageTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: DocId,
    pub uri: String,
    pub triples: Vec<Triple>,
    pub kind: DocKind,
    pub keywords: BTreeMap<String, u32>,
    pub stats: BasicMetadata,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationEdge {
    pub from_doc: DocId,
    pub to_doc: DocId,
    pub kind: RelationKind,
    pub via_predicate: String,
}

/// Ordered set of documents with unique ids.
#[derive(Debug, Default, Clone)]
pub struct Corpus {
    docs: Vec<Document>,
    ids: HashSet<DocId>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, doc: Document) -> Result<(), CorpusError> {
        if !self.ids.insert(doc.doc_id) {
            return Err(CorpusError::DuplicateId(doc.doc_id));
        }
        self.docs.push(doc);
        Ok(())
    }

    /// Parses `source` and adds it, rejecting ids already in the corpus
    /// before doing any parsing work.
    pub fn parse_and_insert(
        &mut self,
        source: &str,
        uri: &str,
        doc_id: DocId,
        config: &TokenizerConfig,
    ) -> Result<&Document, CorpusError> {
        if self.ids.contains(&doc_id) {
            return Err(CorpusError::DuplicateId(doc_id));
        }
        let doc = parse_document(source, uri, doc_id, config)?;
        self.insert(doc)?;
        Ok(self.docs.last().expect("just inserted"))
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn into_docs(self) -> Vec<Document> {
        self.docs
    }
}

/// Reads the `# uri: <IRI>` header from the first line, if present.
pub fn uri_from_header(source: &str) -> Option<String> {
    let first = source.lines().next()?.trim();
    let rest = first.strip_prefix('#')?.trim_start().strip_prefix("uri:")?.trim();
    let iri = rest.strip_prefix('<')?.strip_suffix('>')?;
    (!iri.is_empty()).then(|| iri.to_owned())
}

pub fn parse_document(
    source: &str,
    uri: &str,
    doc_id: DocId,
    config: &TokenizerConfig,
) -> Result<Document, CorpusError> {
    let triples = parse_triples(source)?;
    let kind = classify_document(&triples);
    let keywords = extract_keywords(&triples, config);
    let stats = basic_metadata(&triples);
    Ok(Document {
        doc_id,
        uri: uri.to_owned(),
        triples,
        kind,
        keywords,
        stats,
    })
}

pub fn parse_triples(source: &str) -> Result<Vec<Triple>, CorpusError> {
    let mut triples = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let triple = LineParser::new(trimmed)
            .statement()
            .map_err(|reason| CorpusError::MalformedLine { line: idx + 1, reason })?;
        triples.push(triple);
    }
    Ok(triples)
}

struct LineParser<'a> {
    rest: &'a str,
}

impl<'a> LineParser<'a> {
    fn new(line: &'a str) -> Self {
        LineParser { rest: line }
    }

    fn statement(mut self) -> Result<Triple, String> {
        let subject = self.iri("subject")?;
        let predicate = self.iri("predicate")?;
        if !is_absolute_iri(&subject) {
            return Err(format!("subject <{subject}> is not an absolute IRI"));
        }
        if !is_absolute_iri(&predicate) {
            return Err(format!("predicate <{predicate}> is not an absolute IRI"));
        }
        self.skip_ws();
        let object = match self.rest.chars().next() {
            Some('<') => Object::Iri(self.iri("object")?),
            Some('"') => Object::Literal(self.literal()?),
            _ => return Err("missing object".into()),
        };
        self.skip_ws();
        self.rest = self
            .rest
            .strip_prefix('.')
            .ok_or_else(|| "expected terminating '.'".to_string())?;
        self.skip_ws();
        if !self.rest.is_empty() && !self.rest.starts_with('#') {
            return Err(format!("trailing content: {}", self.rest));
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn iri(&mut self, what: &str) -> Result<String, String> {
        self.skip_ws();
        let body = self
            .rest
            .strip_prefix('<')
            .ok_or_else(|| format!("expected <IRI> for {what}"))?;
        let end = body.find('>').ok_or_else(|| format!("unterminated IRI for {what}"))?;
        let iri = &body[..end];
        if iri.is_empty() || iri.chars().any(char::is_whitespace) {
            return Err(format!("invalid IRI for {what}"));
        }
        self.rest = &body[end + 1..];
        Ok(iri.to_owned())
    }

    fn literal(&mut self) -> Result<String, String> {
        let mut chars = self.rest.char_indices().skip(1);
        let mut value = String::new();
        let close = loop {
            match chars.next() {
                None => return Err("unterminated literal".into()),
                Some((i, '"')) => break i,
                Some((_, '\\')) => match chars.next() {
                    Some((_, 'n')) => value.push('\n'),
                    Some((_, 'r')) => value.push('\r'),
                    Some((_, 't')) => value.push('\t'),
                    Some((_, '"')) => value.push('"'),
                    Some((_, '\\')) => value.push('\\'),
                    _ => return Err("bad escape in literal".into()),
                },
                Some((_, c)) => value.push(c),
            }
        };
        self.rest = &self.rest[close + 1..];
        // Language tags and datatypes are accepted and dropped.
        if let Some(tag) = self.rest.strip_prefix('@') {
            let end = tag
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(tag.len());
            if end == 0 {
                return Err("empty language tag".into());
            }
            self.rest = &tag[end..];
        } else if let Some(dt) = self.rest.strip_prefix("^^") {
            self.rest = dt;
            self.iri("datatype")?;
        }
        if value.is_empty() {
            return Err("empty literal".into());
        }
        Ok(value)
    }
}

fn is_absolute_iri(iri: &str) -> bool {
    match iri.split_once(':') {
        Some((scheme, rest)) => {
            !rest.is_empty()
                && scheme.starts_with(|c: char| c.is_ascii_alphabetic())
                && scheme
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
        None => false,
    }
}

pub fn classify_relation(predicate: &str) -> RelationKind {
    let tables: [(&[&str], RelationKind); 5] = [
        (&vocab::TERM_REF, RelationKind::TermRef),
        (&vocab::IMPORTS, RelationKind::Imports),
        (&vocab::EXTENDS, RelationKind::Extends),
        (&vocab::EXTENDS_ALIASES, RelationKind::Extends),
        (&vocab::PRIOR_VERSION, RelationKind::PriorVersion),
    ];
    tables
        .into_iter()
        .find(|(terms, _)| vocab::is_one_of(predicate, terms))
        .map_or(RelationKind::None, |(_, kind)| kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TypeAssertion {
    ClassDef,
    PropertyDef,
    OntologyHeader,
    Individual,
}

fn type_assertion(triple: &Triple) -> Option<TypeAssertion> {
    if vocab::expand(&triple.predicate) != vocab::rdf_type() {
        return None;
    }
    let ty = triple.object.as_iri()?;
    Some(if vocab::is_one_of(ty, &vocab::CLASS_TYPES) {
        TypeAssertion::ClassDef
    } else if vocab::is_one_of(ty, &vocab::PROPERTY_TYPES) {
        TypeAssertion::PropertyDef
    } else if vocab::is_one_of(ty, &vocab::ONTOLOGY_TYPES) {
        TypeAssertion::OntologyHeader
    } else {
        TypeAssertion::Individual
    })
}

/// True for triples that define a vocabulary term.
pub fn is_term_definition(triple: &Triple) -> bool {
    matches!(
        type_assertion(triple),
        Some(TypeAssertion::ClassDef | TypeAssertion::PropertyDef)
    )
}

/// True for triples that type an individual.
pub fn is_individual_assertion(triple: &Triple) -> bool {
    type_assertion(triple) == Some(TypeAssertion::Individual)
}

pub fn classify_document(triples: &[Triple]) -> DocKind {
    let defines = triples.iter().any(is_term_definition);
    let asserts = triples.iter().any(is_individual_assertion);
    match (defines, asserts) {
        (true, true) => DocKind::Hybrid,
        (true, false) => DocKind::Swo,
        _ => DocKind::Swdb,
    }
}

pub fn basic_metadata(triples: &[Triple]) -> BasicMetadata {
    let mut class_defs = 0;
    let mut property_defs = 0;
    let mut individuals = HashSet::new();
    let mut has_ontology_annotation = false;
    for t in triples {
        match type_assertion(t) {
            Some(TypeAssertion::ClassDef) => class_defs += 1,
            Some(TypeAssertion::PropertyDef) => property_defs += 1,
            Some(TypeAssertion::OntologyHeader) => has_ontology_annotation = true,
            Some(TypeAssertion::Individual) => {
                individuals.insert(t.subject.as_str());
            }
            None => {}
        }
        if vocab::is_one_of(&t.predicate, &vocab::ONTOLOGY_ANNOTATIONS) {
            has_ontology_annotation = true;
        }
    }
    BasicMetadata {
        triple_count: triples.len(),
        class_defs,
        property_defs,
        individual_count: individuals.len(),
        has_ontology_annotation,
        language_tag: language_tag(triples),
    }
}

fn language_tag(triples: &[Triple]) -> LanguageTag {
    if triples.is_empty() {
        return LanguageTag::Unknown;
    }
    let used: HashSet<&str> = triples
        .iter()
        .filter_map(|t| vocab::namespace_of(&t.predicate))
        .collect();
    if used.contains(vocab::OWL) {
        LanguageTag::Owl
    } else if used.contains(vocab::DAML) {
        LanguageTag::Daml
    } else if used.contains(vocab::RDFS) {
        LanguageTag::Rdfs
    } else {
        LanguageTag::Rdf
    }
}

/// Fragment, or last non-empty path segment, of an IRI.
pub fn local_name(iri: &str) -> &str {
    if let Some((_, frag)) = iri.rsplit_once('#') {
        if !frag.is_empty() {
            return frag;
        }
    }
    let trimmed = iri.trim_end_matches(['#', '/']);
    let cut = trimmed.rfind('/').or_else(|| trimmed.rfind(':')).map_or(0, |i| i + 1);
    &trimmed[cut..]
}

pub fn extract_keywords(triples: &[Triple], config: &TokenizerConfig) -> BTreeMap<String, u32> {
    let mut bag = BTreeMap::new();
    let mut add = |text: &str| {
        for token in tokenize(text, config) {
            *bag.entry(token).or_insert(0) += 1;
        }
    };
    for t in triples {
        add(local_name(&t.subject));
        match &t.object {
            Object::Iri(iri) => add(local_name(iri)),
            Object::Literal(value) => add(value),
        }
    }
    bag
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Linkage {
    pub edges: Vec<RelationEdge>,
    /// Relation triples whose object matched no document.
    pub unresolved: usize,
}

/// Resolves relation triples to document-level edges.
///
/// A document defines every IRI it uses as a subject. Imports and
/// prior-version objects are first matched against document URIs. When
/// several documents define a term, the lowest id other than the referring
/// document wins; references that resolve only to the referring document
/// are intra-document and dropped without counting as unresolved.
pub fn link_corpus(docs: &[Document]) -> Linkage {
    let mut by_uri: HashMap<&str, DocId> = HashMap::new();
    let mut definers: HashMap<&str, Vec<DocId>> = HashMap::new();
    let mut ordered: Vec<&Document> = docs.iter().collect();
    ordered.sort_by_key(|d| d.doc_id);
    for doc in &ordered {
        by_uri.entry(normalize_uri(&doc.uri)).or_insert(doc.doc_id);
        for t in &doc.triples {
            let ids = definers.entry(t.subject.as_str()).or_default();
            if ids.last() != Some(&doc.doc_id) {
                ids.push(doc.doc_id);
            }
        }
    }

    let mut linkage = Linkage::default();
    let mut seen = HashSet::new();
    for doc in &ordered {
        for t in &doc.triples {
            let kind = classify_relation(&t.predicate);
            if kind == RelationKind::None {
                continue;
            }
            let Some(object) = t.object.as_iri() else {
                linkage.unresolved += 1;
                continue;
            };
            let by_document = match kind {
                RelationKind::Imports | RelationKind::PriorVersion => by_uri.get(normalize_uri(object)).copied(),
                _ => None,
            };
            let target = by_document.or_else(|| {
                let ids = definers.get(object)?;
                ids.iter()
                    .copied()
                    .find(|&id| id != doc.doc_id)
                    .or_else(|| ids.first().copied())
            });
            match target {
                None => linkage.unresolved += 1,
                Some(to) if to == doc.doc_id => {}
                Some(to) => {
                    if seen.insert((doc.doc_id, to, kind)) {
                        linkage.edges.push(RelationEdge {
                            from_doc: doc.doc_id,
                            to_doc: to,
                            kind,
                            via_predicate: t.predicate.clone(),
                        });
                    }
                }
            }
        }
    }
    linkage
}

fn normalize_uri(uri: &str) -> &str {
    uri.trim_end_matches(['#', '/'])
}

//! Well-known namespaces and the inter-document relation predicate table.

use std::borrow::Cow;

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const DAML: &str = "http://www.daml.org/2001/03/daml+oil#";

/// Built-in prefix table used when matching vocabulary terms.
pub const PREFIXES: [(&str, &str); 4] = [("rdf", RDF), ("rdfs", RDFS), ("owl", OWL), ("daml", DAML)];

/// Expands `owl:imports`-style compact names against [`PREFIXES`]. Anything
/// else is returned unchanged.
pub fn expand(iri: &str) -> Cow<'_, str> {
    if let Some((prefix, local)) = iri.split_once(':') {
        if !local.starts_with("//") {
            if let Some((_, ns)) = PREFIXES.iter().find(|(p, _)| *p == prefix) {
                return Cow::Owned(format!("{ns}{local}"));
            }
        }
    }
    Cow::Borrowed(iri)
}

/// Returns the namespace a fully expanded IRI belongs to, if it is one of the
/// built-in ones.
pub fn namespace_of(iri: &str) -> Option<&'static str> {
    let expanded = expand(iri);
    [RDF, RDFS, OWL, DAML]
        .into_iter()
        .find(|ns| expanded.starts_with(ns) && expanded.len() > ns.len())
}

pub fn rdf_type() -> String {
    format!("{RDF}type")
}

pub const TERM_REF: [&str; 2] = ["owl:termRef", "daml:termRef"];

pub const IMPORTS: [&str; 2] = ["owl:imports", "daml:imports"];

pub const EXTENDS: [&str; 17] = [
    "rdfs:subClassOf",
    "rdfs:subPropertyOf",
    "owl:disjointWith",
    "owl:equivalentClass",
    "owl:equivalentProperty",
    "owl:complementOf",
    "owl:inverseOf",
    "owl:intersectionOf",
    "owl:unionOf",
    "daml:sameClassAs",
    "daml:samePropertyAs",
    "daml:inverseOf",
    "daml:disjointWith",
    "daml:complementOf",
    "daml:unionOf",
    "daml:disjointUnionOf",
    "daml:intersectionOf",
];

/// Misspelled form of `daml:intersectionOf` as it circulates in published
/// predicate tables; accepted as an alias.
pub const EXTENDS_ALIASES: [&str; 1] = ["daml:ntersectionOf"];

pub const PRIOR_VERSION: [&str; 5] = [
    "owl:priorVersion",
    "owl:DeprecatedProperty",
    "owl:DeprecatedClass",
    "owl:backwardCompatibleWith",
    "owl:incompatibleWith",
];

/// Types whose instances are vocabulary terms rather than individuals.
pub const CLASS_TYPES: [&str; 3] = ["rdfs:Class", "owl:Class", "daml:Class"];

pub const PROPERTY_TYPES: [&str; 6] = [
    "rdf:Property",
    "owl:ObjectProperty",
    "owl:DatatypeProperty",
    "owl:AnnotationProperty",
    "daml:ObjectProperty",
    "daml:DatatypeProperty",
];

pub const ONTOLOGY_TYPES: [&str; 2] = ["owl:Ontology", "daml:Ontology"];

/// Predicates that only make sense on an ontology header.
pub const ONTOLOGY_ANNOTATIONS: [&str; 7] = [
    "owl:versionInfo",
    "owl:imports",
    "owl:priorVersion",
    "owl:backwardCompatibleWith",
    "owl:incompatibleWith",
    "daml:versionInfo",
    "daml:imports",
];

/// True when `iri` (compact or expanded) names one of `terms`.
pub fn is_one_of(iri: &str, terms: &[&str]) -> bool {
    let expanded = expand(iri);
    terms.iter().any(|t| expand(t) == expanded)
}

//! The measure catalog: column names, the input each measure needs, and the
//! taxonomy group it belongs to.

use std::fmt;

use qsim_core::stats::ClusterDefinitions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dependency {
    Qrels,
    WordNet,
    Embeddings,
}

impl fmt::Display for Dependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dependency::Qrels => "relevance judgments (qrels)",
            Dependency::WordNet => "a WordNet database (wordnet_dir)",
            Dependency::Embeddings => "an embedding provider (embeddings)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    QueryStatistics,
    QuerySimilarity,
    IrMetrics,
    SerpOverlap,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::QueryStatistics => "query_statistics",
            Group::QuerySimilarity => "query_similarity",
            Group::IrMetrics => "ir_metrics",
            Group::SerpOverlap => "serp_overlap",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Measure {
    pub name: &'static str,
    pub dependency: Option<Dependency>,
    pub group: Group,
}

const fn m(name: &'static str, dependency: Option<Dependency>, group: Group) -> Measure {
    Measure {
        name,
        dependency,
        group,
    }
}

use Dependency::*;
use Group::*;

/// Every measure, in column order.
pub const MEASURES: [Measure; 17] = [
    m("query_length_chars", None, QueryStatistics),
    m("query_length_terms", None, QueryStatistics),
    m("unique_terms", None, QueryStatistics),
    m("type_token_ratio", None, QueryStatistics),
    m("flesch_kincaid", None, QueryStatistics),
    m("named_entities", None, QueryStatistics),
    m("jaccard", None, QuerySimilarity),
    m("cosine", Some(Embeddings), QuerySimilarity),
    m("bert_score", Some(Embeddings), QuerySimilarity),
    m("wordnet", Some(WordNet), QuerySimilarity),
    m("ndcg", Some(Qrels), IrMetrics),
    m("precision", Some(Qrels), IrMetrics),
    m("recall", Some(Qrels), IrMetrics),
    m("map", Some(Qrels), IrMetrics),
    m("mrr", Some(Qrels), IrMetrics),
    m("serp_jaccard", None, SerpOverlap),
    m("rbo", None, SerpOverlap),
];

pub fn lookup(name: &str) -> Option<&'static Measure> {
    MEASURES.iter().find(|m| m.name == name)
}

/// Taxonomy groups restricted to the given columns; groups left with fewer
/// than two members are omitted.
pub fn default_clusters(columns: &[String]) -> ClusterDefinitions {
    let mut out = ClusterDefinitions::new();
    for group in [QueryStatistics, QuerySimilarity, IrMetrics, SerpOverlap] {
        let members: Vec<String> = MEASURES
            .iter()
            .filter(|m| m.group == group && columns.iter().any(|c| c == m.name))
            .map(|m| m.name.to_string())
            .collect();
        if members.len() >= 2 {
            out.insert(group.name().to_string(), members);
        }
    }
    out
}

//! Query-to-query similarity: term Jaccard, embedding cosine, BERT-score and
//! WordNet similarity.
//!
//! Functions return `None` when the score is undefined for the inputs (empty
//! sides, zero vectors, nothing scoreable); those become missing cells.

use thiserror::Error;

use crate::scalar::Scalar;
use crate::text::TokenizedQuery;
use crate::wordnet::SynsetGraph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("embedding dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// A named similarity value; `value` is `None` when undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityScore<T> {
    pub measure_name: &'static str,
    pub value: Option<T>,
}

impl<T: Copy> SimilarityScore<T> {
    pub fn defined(&self) -> bool {
        self.value.is_some()
    }
}

pub fn jaccard_similarity<T: Scalar>(a: &TokenizedQuery, b: &TokenizedQuery) -> Option<T> {
    set_jaccard(a.term_set(), b.term_set())
}

/// `|A∩B| / |A∪B|`; `None` when either set is empty.
pub(crate) fn set_jaccard<T: Scalar, I: Eq + std::hash::Hash>(
    a: std::collections::HashSet<I>,
    b: std::collections::HashSet<I>,
) -> Option<T> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let inter = a.intersection(&b).count();
    let union = a.len() + b.len() - inter;
    Some(T::of_usize(inter) / T::of_usize(union))
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<Option<T>, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimensionMismatch(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if a.is_empty() || na == T::zero() || nb == T::zero() {
        return Ok(None);
    }
    Ok(Some(dot(a, b) / (na * nb)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BertScore<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

/// Greedy-matching BERT-score without IDF weighting or baseline rescaling.
///
/// `real` and `simulated` are token embedding rows. Precision matches every
/// simulated token to its closest real token, recall the other way round.
/// Zero rows are left as-is and match nothing better than 0.
pub fn bert_score<T: Scalar>(
    real: &[Vec<T>],
    simulated: &[Vec<T>],
) -> Result<Option<BertScore<T>>, SimilarityError> {
    if real.is_empty() || simulated.is_empty() {
        return Ok(None);
    }
    let dim = real[0].len();
    for row in real.iter().chain(simulated) {
        if row.len() != dim {
            return Err(SimilarityError::DimensionMismatch(dim, row.len()));
        }
    }
    let unit = |rows: &[Vec<T>]| -> Vec<Vec<T>> {
        rows.iter()
            .map(|r| {
                let n = norm(r);
                if n == T::zero() {
                    r.clone()
                } else {
                    r.iter().map(|&x| x / n).collect()
                }
            })
            .collect()
    };
    let (er, es) = (unit(real), unit(simulated));

    // sim[i][j] = cos(simulated i, real j)
    let sim: Vec<Vec<T>> = es
        .iter()
        .map(|s| er.iter().map(|r| dot(s, r)).collect())
        .collect();
    let max = |it: &mut dyn Iterator<Item = T>| it.fold(T::neg_infinity(), T::max);

    let precision = sim
        .iter()
        .map(|row| max(&mut row.iter().copied()))
        .sum::<T>()
        / T::of_usize(es.len());
    let recall = (0..er.len())
        .map(|j| max(&mut sim.iter().map(|row| row[j])))
        .sum::<T>()
        / T::of_usize(er.len());
    let denom = precision + recall;
    let f1 = if denom == T::zero() {
        T::zero()
    } else {
        T::of(2.0) * precision * recall / denom
    };
    Ok(Some(BertScore {
        precision,
        recall,
        f1,
    }))
}

// Best Wu-Palmer score between two terms, `None` when neither an exact match
// nor any comparable sense pair exists.
fn term_similarity<T: Scalar>(g: &SynsetGraph, a: &str, b: &str) -> Option<T> {
    if a == b {
        return Some(T::one());
    }
    let mut best: Option<T> = None;
    for sa in g.senses(a) {
        for sb in g.senses(b) {
            if sa.pos() != sb.pos() {
                continue;
            }
            if let Ok(w) = g.wu_palmer::<T>(sa, sb) {
                best = Some(best.map_or(w, |cur| cur.max(w)));
            }
        }
    }
    best
}

fn directed_wordnet<T: Scalar>(g: &SynsetGraph, from: &[String], to: &[String]) -> Option<T> {
    let mut total = T::zero();
    let mut included = 0usize;
    for a in from {
        let has_senses = g.senses(a).next().is_some();
        let exact = to.iter().any(|b| b == a);
        if !has_senses && !exact {
            continue;
        }
        let best = to
            .iter()
            .filter_map(|b| term_similarity::<T>(g, a, b))
            .fold(T::zero(), T::max);
        total = total + best;
        included += 1;
    }
    (included > 0).then(|| total / T::of_usize(included))
}

/// Symmetric WordNet similarity between two queries.
///
/// Each direction averages, over the scoreable terms of one query, the best
/// term-level Wu-Palmer score against the other query; the result is the mean
/// of both directions, or the one defined direction if only one is.
pub fn wordnet_similarity<T: Scalar>(
    a: &TokenizedQuery,
    b: &TokenizedQuery,
    g: &SynsetGraph,
) -> Option<T> {
    let ab = directed_wordnet::<T>(g, &a.tokens, &b.tokens);
    let ba = directed_wordnet::<T>(g, &b.tokens, &a.tokens);
    match (ab, ba) {
        (Some(x), Some(y)) => Some((x + y) / T::of(2.0)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

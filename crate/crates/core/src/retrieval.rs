//! Relevance judgments and classical retrieval effectiveness metrics.
//!
//! Binary metrics treat a grade of 1 or more as relevant. Unjudged documents
//! count as non-relevant with zero gain. Metrics return `None` when the topic
//! has no judgments they can be computed against.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QrelsError {
    #[error("line {line}: expected 4 columns `topic iteration doc grade`, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: grade `{value}` is not an integer")]
    BadGrade { line: usize, value: String },
    #[error("line {line}: conflicting grades for topic `{topic}`, doc `{doc}`")]
    Conflict {
        line: usize,
        topic: String,
        doc: String,
    },
}

/// Topic → document → relevance grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    topics: BTreeMap<String, HashMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, topic: impl Into<String>, doc: impl Into<String>, grade: u32) {
        self.topics
            .entry(topic.into())
            .or_default()
            .insert(doc.into(), grade);
    }

    pub fn topic(&self, topic: &str) -> Option<&HashMap<String, u32>> {
        self.topics.get(topic)
    }

    pub fn grade(&self, topic: &str, doc: &str) -> Option<u32> {
        self.topics.get(topic)?.get(doc).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }
}

/// Parses TREC qrels (`topic iteration doc grade`). Negative grades are clamped to 0.
pub fn parse_qrels(raw: &str) -> Result<Qrels, QrelsError> {
    let mut qrels = Qrels::new();
    for (i, line) in raw.lines().enumerate() {
        let line_no = i + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if cols.len() != 4 {
            return Err(QrelsError::ColumnCount {
                line: line_no,
                found: cols.len(),
            });
        }
        let (topic, doc) = (cols[0], cols[2]);
        let grade: i64 = cols[3].parse().map_err(|_| QrelsError::BadGrade {
            line: line_no,
            value: cols[3].to_owned(),
        })?;
        let grade = if grade < 0 {
            log::warn!("qrels line {line_no}: negative grade {grade} clamped to 0");
            0
        } else {
            u32::try_from(grade).map_err(|_| QrelsError::BadGrade {
                line: line_no,
                value: cols[3].to_owned(),
            })?
        };
        if let Some(prev) = qrels.grade(topic, doc) {
            if prev != grade {
                return Err(QrelsError::Conflict {
                    line: line_no,
                    topic: topic.to_owned(),
                    doc: doc.to_owned(),
                });
            }
        }
        qrels.insert(topic, doc, grade);
    }
    Ok(qrels)
}

/// Ranked result list for one topic; document ids are unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList<D = String> {
    pub topic_id: String,
    pub doc_ids: Vec<D>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate document in ranked list at position {0}")]
pub struct DuplicateDoc(pub usize);

impl<D: Eq + Hash> RankedList<D> {
    pub fn new(topic_id: impl Into<String>, doc_ids: Vec<D>) -> Result<Self, DuplicateDoc> {
        let mut seen = HashSet::with_capacity(doc_ids.len());
        for (i, d) in doc_ids.iter().enumerate() {
            if !seen.insert(d) {
                return Err(DuplicateDoc(i));
            }
        }
        Ok(RankedList {
            topic_id: topic_id.into(),
            doc_ids,
        })
    }
}

const RELEVANT: u32 = 1;

struct Judged<'a> {
    grades: &'a HashMap<String, u32>,
}

impl<'a> Judged<'a> {
    fn of(r: &RankedList, q: &'a Qrels) -> Option<Self> {
        q.topic(&r.topic_id).map(|grades| Judged { grades })
    }

    fn grade(&self, doc: &str) -> u32 {
        self.grades.get(doc).copied().unwrap_or(0)
    }

    fn relevant(&self, doc: &str) -> bool {
        self.grade(doc) >= RELEVANT
    }

    fn total_relevant(&self) -> usize {
        self.grades.values().filter(|&&g| g >= RELEVANT).count()
    }
}

pub fn precision_at_k<T: Scalar>(r: &RankedList, q: &Qrels, k: usize) -> Option<T> {
    assert!(k >= 1, "cutoff must be at least 1");
    let judged = Judged::of(r, q)?;
    let hits = r
        .doc_ids
        .iter()
        .take(k)
        .filter(|d| judged.relevant(d))
        .count();
    Some(T::of_usize(hits) / T::of_usize(k))
}

pub fn recall_at_k<T: Scalar>(r: &RankedList, q: &Qrels, k: usize) -> Option<T> {
    assert!(k >= 1, "cutoff must be at least 1");
    let judged = Judged::of(r, q)?;
    let total = judged.total_relevant();
    if total == 0 {
        return None;
    }
    let hits = r
        .doc_ids
        .iter()
        .take(k)
        .filter(|d| judged.relevant(d))
        .count();
    Some(T::of_usize(hits) / T::of_usize(total))
}

pub fn reciprocal_rank<T: Scalar>(r: &RankedList, q: &Qrels) -> Option<T> {
    let judged = Judged::of(r, q)?;
    Some(
        r.doc_ids
            .iter()
            .position(|d| judged.relevant(d))
            .map_or(T::zero(), |i| T::one() / T::of_usize(i + 1)),
    )
}

/// Average precision over the full ranking, normalized by the total number of
/// relevant documents in the judgments.
pub fn average_precision<T: Scalar>(r: &RankedList, q: &Qrels) -> Option<T> {
    let judged = Judged::of(r, q)?;
    let total = judged.total_relevant();
    if total == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = T::zero();
    for (i, d) in r.doc_ids.iter().enumerate() {
        if judged.relevant(d) {
            hits += 1;
            sum = sum + T::of_usize(hits) / T::of_usize(i + 1);
        }
    }
    Some(sum / T::of_usize(total))
}

fn discount<T: Scalar>(rank: usize) -> T {
    (T::of_usize(rank) + T::one()).log2()
}

/// nDCG@k with linear gain and a `log2(rank + 1)` discount.
pub fn ndcg_at_k<T: Scalar>(r: &RankedList, q: &Qrels, k: usize) -> Option<T> {
    assert!(k >= 1, "cutoff must be at least 1");
    let judged = Judged::of(r, q)?;
    let mut ideal: Vec<u32> = judged.grades.values().copied().filter(|&g| g > 0).collect();
    if ideal.is_empty() {
        return None;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let dcg: T = r
        .doc_ids
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, d)| T::from_u32(judged.grade(d)).unwrap() / discount::<T>(i + 1))
        .sum();
    let idcg: T = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| T::from_u32(g).unwrap() / discount::<T>(i + 1))
        .sum();
    Some(dcg / idcg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(docs: &[&str]) -> RankedList {
        RankedList::new("t", docs.iter().map(|d| d.to_string()).collect()).unwrap()
    }

    fn qrels(grades: &[(&str, u32)]) -> Qrels {
        let mut q = Qrels::new();
        for &(d, g) in grades {
            q.insert("t", d, g);
        }
        q
    }

    #[test]
    fn parse_examples() {
        assert!(parse_qrels("").unwrap().is_empty());
        let q = parse_qrels("301 0 doc7 2\n").unwrap();
        assert_eq!(q.grade("301", "doc7"), Some(2));
        assert_eq!(
            parse_qrels("301 0 doc1 1\n301 0 doc7 x\n"),
            Err(QrelsError::BadGrade {
                line: 2,
                value: "x".into()
            })
        );
        assert_eq!(
            parse_qrels("301 0 doc7\n"),
            Err(QrelsError::ColumnCount { line: 1, found: 3 })
        );
        assert!(matches!(
            parse_qrels("1 0 d 1\n1 0 d 2\n"),
            Err(QrelsError::Conflict { line: 2, .. })
        ));
        let q = parse_qrels("1 0 d 1\n1 Q0 d 1\n1 0 e -1\n").unwrap();
        assert_eq!(q.grade("1", "d"), Some(1));
        assert_eq!(q.grade("1", "e"), Some(0));
    }

    #[test]
    fn ranked_list_rejects_duplicates() {
        assert_eq!(
            RankedList::new("t", vec!["a", "b", "a"]),
            Err(DuplicateDoc(2))
        );
    }

    #[test]
    fn precision_and_rr() {
        let q = qrels(&[("a", 1), ("c", 2), ("e", 1), ("z", 1)]);
        let r = list(&["a", "b", "c", "d", "e"]);
        assert_eq!(precision_at_k::<f64>(&r, &q, 5), Some(0.6));
        assert_eq!(recall_at_k::<f64>(&r, &q, 5), Some(0.75));
        let r = list(&["x", "y", "w", "c"]);
        assert_eq!(reciprocal_rank::<f64>(&r, &q), Some(0.25));
        assert_eq!(reciprocal_rank::<f64>(&list(&["x"]), &q), Some(0.0));
    }

    #[test]
    fn ap_example() {
        let q = qrels(&[("a", 1), ("c", 1), ("b", 0)]);
        let ap = average_precision::<f64>(&list(&["a", "b", "c"]), &q).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ndcg_examples() {
        let q = qrels(&[("a", 2), ("b", 0), ("c", 1)]);
        assert_eq!(ndcg_at_k::<f64>(&list(&["a", "c", "b"]), &q, 3), Some(1.0));
        let v = ndcg_at_k::<f64>(&list(&["a", "b", "c"]), &q, 3).unwrap();
        let expected = 2.5 / (2.0 + 1.0 / 3f64.log2());
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.9503).abs() < 1e-4);
        assert_eq!(ndcg_at_k::<f64>(&list(&["x", "y"]), &q, 3), Some(0.0));
    }

    #[test]
    fn undefined_cases() {
        let q = qrels(&[("a", 0)]);
        let r = RankedList::new("other", vec!["a".to_string()]).unwrap();
        assert_eq!(precision_at_k::<f64>(&r, &q, 1), None);
        assert_eq!(reciprocal_rank::<f64>(&r, &q), None);
        let r = list(&["a"]);
        assert_eq!(recall_at_k::<f64>(&r, &q, 1), None);
        assert_eq!(average_precision::<f64>(&r, &q), None);
        assert_eq!(ndcg_at_k::<f64>(&r, &q, 1), None);
        assert_eq!(precision_at_k::<f64>(&r, &q, 1), Some(0.0));
    }
}

//! Fills empty SERPs by asking a retrieval service for each query's results.
//!
//! The service takes `POST {"query": ..., "k": ...}` and answers
//! `{"doc_ids": [...]}`, best first.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::time::Duration;

use qsim_core::http::{JsonClient, RetryPolicy};
use qsim_core::session::{parse_sessions, serialize_sessions, Session, SessionKind};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::AugmentSettings;
use crate::error::PipelineError;
use crate::output::write_atomic;

fn parse_doc_ids(query: &str, v: &Value, k: usize) -> Result<Vec<String>, String> {
    let ids = v
        .get("doc_ids")
        .and_then(Value::as_array)
        .ok_or_else(|| "response has no `doc_ids` array".to_owned())?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(ids.len().min(k));
    for id in ids.iter().take(k) {
        let id = id
            .as_str()
            .ok_or_else(|| format!("non-string document id {id}"))?;
        if !seen.insert(id) {
            return Err(format!("duplicate in SERP: `{id}` for query `{query}`"));
        }
        out.push(id.to_owned());
    }
    Ok(out)
}

/// Fills every interaction whose SERP is empty; returns how many were filled.
pub fn augment_sessions(
    sessions: &mut [Session],
    settings: &AugmentSettings,
) -> Result<usize, PipelineError> {
    let endpoint = settings
        .endpoint
        .as_deref()
        .ok_or(crate::config::ConfigError::Missing(
            "retrieval endpoint (--endpoint)",
        ))?;
    let queries: Vec<String> = sessions
        .iter()
        .flat_map(|s| &s.interactions)
        .filter(|i| i.serp.is_empty())
        .map(|i| i.query.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if queries.is_empty() {
        return Ok(0);
    }

    let client = JsonClient::new(
        Duration::from_millis(settings.timeout_ms),
        RetryPolicy::default(),
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.max_in_flight.max(1))
        .build()
        .map_err(|e| PipelineError::data("augment", e))?;
    let k = settings.k;
    let results: Vec<Vec<String>> = pool.install(|| {
        queries
            .par_iter()
            .map(|q| {
                let v = client
                    .post(endpoint, &json!({ "query": q, "k": k }))
                    .map_err(|e| PipelineError::data(format!("query `{q}`"), e))?;
                parse_doc_ids(q, &v, k).map_err(|e| PipelineError::data(endpoint, e))
            })
            .collect::<Result<_, _>>()
    })?;
    let serps: HashMap<&str, Vec<String>> =
        queries.iter().map(String::as_str).zip(results).collect();

    let mut filled = 0;
    for interaction in sessions.iter_mut().flat_map(|s| &mut s.interactions) {
        if interaction.serp.is_empty() {
            interaction.serp = serps[interaction.query.as_str()].clone();
            interaction.augmented = Some(true);
            filled += 1;
        }
    }
    Ok(filled)
}

/// Reads a session file, fills empty SERPs and writes the result atomically.
pub fn augment_file(
    input: &Path,
    output: &Path,
    settings: &AugmentSettings,
) -> Result<usize, PipelineError> {
    let ctx = || input.display().to_string();
    let raw = std::fs::read(input).map_err(|e| PipelineError::data(ctx(), e))?;
    let mut sessions =
        parse_sessions(&raw, SessionKind::Simulated).map_err(|e| PipelineError::data(ctx(), e))?;
    let filled = augment_sessions(&mut sessions, settings)?;
    write_atomic(output, &serialize_sessions(&sessions))
        .map_err(|e| PipelineError::data(output.display().to_string(), e))?;
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_is_truncated_and_checked() {
        let v = json!({"doc_ids": ["a", "b", "c"]});
        assert_eq!(parse_doc_ids("q", &v, 2).unwrap(), ["a", "b"]);
        let dup = json!({"doc_ids": ["a", "a"]});
        assert!(parse_doc_ids("q", &dup, 5)
            .unwrap_err()
            .contains("duplicate in SERP"));
        assert!(parse_doc_ids("q", &json!({}), 5).is_err());
    }
}

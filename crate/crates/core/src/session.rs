//! Session data model: real and simulated search sessions, corpora and pairing.
//!
//! Sessions are exchanged as JSON documents of the form
//! `{"sessions": [{"session_id", "id", "simulator_id"?, "rank"?, "interactions": [...]}]}`.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("malformed session JSON at `{path}`: {message}")]
    Malformed { path: String, message: String },
    #[error("session `{id}`: rank must be ≥ 1")]
    ZeroRank { id: String },
    #[error("session `{id}`: rank is only allowed on simulated sessions")]
    RankOnRealSession { id: String },
    #[error("duplicate session id `{0}`")]
    DuplicateId(String),
    #[error("session `{0}` has no interactions")]
    NoInteractions(String),
    #[error("session `{id}`: duplicate document `{doc}` in SERP")]
    DuplicateSerpDoc { id: String, doc: String },
    #[error("session `{id}`: clicked document `{doc}` is not in the SERP")]
    ClickOutsideSerp { id: String, doc: String },
    #[error("duplicate real session_id `{0}`")]
    DuplicateRealSession(String),
    #[error("simulated session `{0}` has no simulator_id")]
    MissingSimulator(String),
    #[error("simulator `{simulator}`: duplicate rank {rank} for session_id `{session_id}`")]
    DuplicateRank {
        simulator: String,
        session_id: String,
        rank: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interaction {
    pub query: String,
    #[serde(default)]
    pub serp: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clicked_doc_ids: Option<Vec<String>>,
    /// Set when the SERP was filled in by the augmentation step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmented: Option<bool>,
}

impl Interaction {
    pub fn new(query: impl Into<String>, serp: Vec<String>) -> Self {
        Interaction {
            query: query.into(),
            serp,
            clicked_doc_ids: None,
            augmented: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulator_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<u32>,
    pub interactions: Vec<Interaction>,
}

impl Session {
    /// Query of record: the first interaction's query, NFC-normalized.
    pub fn query(&self) -> String {
        self.interactions
            .first()
            .map(|i| i.query.nfc().collect())
            .unwrap_or_default()
    }

    /// SERP of the first interaction.
    pub fn serp(&self) -> &[String] {
        self.interactions
            .first()
            .map(|i| i.serp.as_slice())
            .unwrap_or(&[])
    }

    fn validate(&self) -> Result<(), SessionError> {
        if self.interactions.is_empty() {
            return Err(SessionError::NoInteractions(self.id.clone()));
        }
        for interaction in &self.interactions {
            let mut seen = HashSet::with_capacity(interaction.serp.len());
            for doc in &interaction.serp {
                if !seen.insert(doc.as_str()) {
                    return Err(SessionError::DuplicateSerpDoc {
                        id: self.id.clone(),
                        doc: doc.clone(),
                    });
                }
            }
            for doc in interaction.clicked_doc_ids.iter().flatten() {
                if !seen.contains(doc.as_str()) {
                    return Err(SessionError::ClickOutsideSerp {
                        id: self.id.clone(),
                        doc: doc.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionKind {
    Real,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMode {
    OneToOne,
    OneToMany,
}

impl std::str::FromStr for PairingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one-to-one" => Ok(PairingMode::OneToOne),
            "one-to-many" => Ok(PairingMode::OneToMany),
            other => Err(format!(
                "unknown pairing mode `{other}` (expected one-to-one or one-to-many)"
            )),
        }
    }
}

impl std::fmt::Display for PairingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PairingMode::OneToOne => "one-to-one",
            PairingMode::OneToMany => "one-to-many",
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionDocument {
    sessions: Vec<RawSession>,
}

// Rank is read as a signed integer so that 0 and negatives get a proper message.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSession {
    session_id: String,
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    simulator_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rank: Option<i64>,
    interactions: Vec<Interaction>,
}

/// Parses a session JSON document.
pub fn parse_sessions(raw: &[u8], kind: SessionKind) -> Result<Vec<Session>, SessionError> {
    let de = &mut serde_json::Deserializer::from_slice(raw);
    let doc: SessionDocument =
        serde_path_to_error::deserialize(de).map_err(|e| SessionError::Malformed {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;

    let mut ids = HashSet::new();
    let mut sessions = Vec::with_capacity(doc.sessions.len());
    for raw in doc.sessions {
        let rank = match (raw.rank, kind) {
            (Some(_), SessionKind::Real) => {
                return Err(SessionError::RankOnRealSession { id: raw.id })
            }
            (Some(r), SessionKind::Simulated) if r < 1 => {
                return Err(SessionError::ZeroRank { id: raw.id })
            }
            (Some(r), SessionKind::Simulated) => {
                Some(u32::try_from(r).map_err(|_| SessionError::Malformed {
                    path: format!("sessions.{}.rank", raw.id),
                    message: format!("rank {r} out of range"),
                })?)
            }
            (None, _) => None,
        };
        if !ids.insert(raw.id.clone()) {
            return Err(SessionError::DuplicateId(raw.id));
        }
        let session = Session {
            session_id: raw.session_id,
            id: raw.id,
            simulator_id: raw.simulator_id,
            rank,
            interactions: raw.interactions,
        };
        session.validate()?;
        sessions.push(session);
    }
    Ok(sessions)
}

/// Serializes sessions back into the session JSON document format.
pub fn serialize_sessions(sessions: &[Session]) -> Vec<u8> {
    let doc = SessionDocument {
        sessions: sessions
            .iter()
            .map(|s| RawSession {
                session_id: s.session_id.clone(),
                id: s.id.clone(),
                simulator_id: s.simulator_id.clone(),
                rank: s.rank.map(i64::from),
                interactions: s.interactions.clone(),
            })
            .collect(),
    };
    serde_json::to_vec_pretty(&doc).expect("session document serializes")
}

#[derive(Debug, Clone, Default)]
pub struct SessionCorpus {
    pub real: Vec<Session>,
    /// Simulator id → its sessions, in input order.
    pub simulated: BTreeMap<String, Vec<Session>>,
}

impl SessionCorpus {
    pub fn simulator_ids(&self) -> impl Iterator<Item = &str> {
        self.simulated.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty() && self.simulated.is_empty()
    }
}

pub fn build_corpus(
    real: Vec<Session>,
    simulated: Vec<Session>,
) -> Result<SessionCorpus, SessionError> {
    let mut seen = HashSet::new();
    for s in &real {
        if !seen.insert(s.session_id.as_str()) {
            return Err(SessionError::DuplicateRealSession(s.session_id.clone()));
        }
    }

    let mut groups: BTreeMap<String, Vec<Session>> = BTreeMap::new();
    for s in simulated {
        let Some(sim) = s.simulator_id.clone() else {
            return Err(SessionError::MissingSimulator(s.id));
        };
        groups.entry(sim).or_default().push(s);
    }
    for (sim, sessions) in &groups {
        let mut ranks = HashSet::new();
        for s in sessions {
            if let Some(rank) = s.rank {
                if !ranks.insert((s.session_id.as_str(), rank)) {
                    return Err(SessionError::DuplicateRank {
                        simulator: sim.clone(),
                        session_id: s.session_id.clone(),
                        rank,
                    });
                }
            }
        }
    }
    Ok(SessionCorpus {
        real,
        simulated: groups,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionPair {
    pub session_id: String,
    pub simulator_id: String,
    /// Effective rank of the simulated session within its topic (1-based).
    pub rank: u32,
    pub real: Session,
    pub simulated: Session,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unmatched {
    pub simulator_id: String,
    pub session_id: String,
}

#[derive(Debug, Clone, Default)]
pub struct Pairing {
    pub pairs: BTreeMap<String, Vec<SessionPair>>,
    /// Real sessions without a simulated counterpart, per simulator.
    pub unmatched: Vec<Unmatched>,
}

/// Simulated candidates of one simulator for one topic, ordered by effective rank.
///
/// Sessions without an explicit rank take their position among the topic's
/// candidates in input order; explicit ranks win, input order breaks ties.
pub fn ranked_candidates<'a>(sessions: &'a [Session], session_id: &str) -> Vec<(u32, &'a Session)> {
    let mut candidates: Vec<(u32, usize, &Session)> = sessions
        .iter()
        .filter(|s| s.session_id == session_id)
        .enumerate()
        .map(|(pos, s)| (s.rank.unwrap_or(pos as u32 + 1), pos, s))
        .collect();
    candidates.sort_by_key(|&(rank, pos, _)| (rank, pos));
    candidates.into_iter().map(|(r, _, s)| (r, s)).collect()
}

pub fn pair_sessions(corpus: &SessionCorpus, mode: PairingMode) -> Pairing {
    let mut real_sorted: Vec<&Session> = corpus.real.iter().collect();
    real_sorted.sort_by(|a, b| a.session_id.cmp(&b.session_id));

    let mut pairing = Pairing::default();
    for (sim, sessions) in &corpus.simulated {
        let by_topic: HashMap<&str, ()> = sessions
            .iter()
            .map(|s| (s.session_id.as_str(), ()))
            .collect();
        let mut pairs = Vec::new();
        for real in &real_sorted {
            if !by_topic.contains_key(real.session_id.as_str()) {
                pairing.unmatched.push(Unmatched {
                    simulator_id: sim.clone(),
                    session_id: real.session_id.clone(),
                });
                continue;
            }
            let candidates = ranked_candidates(sessions, &real.session_id);
            let take = match mode {
                PairingMode::OneToOne => 1,
                PairingMode::OneToMany => candidates.len(),
            };
            pairs.extend(
                candidates
                    .into_iter()
                    .take(take)
                    .map(|(rank, s)| SessionPair {
                        session_id: real.session_id.clone(),
                        simulator_id: sim.clone(),
                        rank,
                        real: (*real).clone(),
                        simulated: s.clone(),
                    }),
            );
        }
        pairing.pairs.insert(sim.clone(), pairs);
    }
    pairing
}

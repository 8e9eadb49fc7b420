//! Per-pair measure computation and the JSONL / CSV measure reports.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use qsim_core::embedding::{open_provider, EmbeddingMatrix, EmbeddingProvider, Granularity};
use qsim_core::retrieval::{
    average_precision, ndcg_at_k, parse_qrels, precision_at_k, recall_at_k, reciprocal_rank, Qrels,
    RankedList,
};
use qsim_core::serp::{rbo, serp_jaccard, RboParams};
use qsim_core::session::{
    build_corpus, pair_sessions, parse_sessions, PairingMode, SessionCorpus, SessionKind,
    SessionPair, Unmatched,
};
use qsim_core::similarity::{
    bert_score, cosine_similarity, jaccard_similarity, wordnet_similarity,
};
use qsim_core::stats::{MeasureMatrix, RowKey};
use qsim_core::text::{
    flesch_kincaid_grade, named_entity_count, query_length_chars, query_length_terms, tokenize,
    type_token_ratio, unique_term_count, TokenizedQuery,
};
use qsim_core::wordnet::SynsetGraph;
use rayon::prelude::*;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::PipelineError;
use crate::output::{matrix_csv, write_atomic, KEY_COLUMNS, TOOLKIT};

/// Everything the measures read besides the config.
pub struct Inputs {
    pub corpus: SessionCorpus,
    pub qrels: Option<Qrels>,
    pub wordnet: Option<SynsetGraph>,
    pub embeddings: Option<Box<dyn EmbeddingProvider>>,
    pub annotations: Option<HashMap<String, Vec<String>>>,
}

fn read(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|e| PipelineError::data(path.display().to_string(), e))
}

/// Loads sessions and whatever the enabled measures need.
pub fn load_inputs(config: &RunConfig, measures: &[&str]) -> Result<Inputs, PipelineError> {
    let needs = |name: &str| measures.contains(&name);

    let real_path = config.resolve(config.real.as_ref().expect("validated real path"));
    let real = parse_sessions(&read(&real_path)?, SessionKind::Real)
        .map_err(|e| PipelineError::data(real_path.display().to_string(), e))?;
    let mut simulated = Vec::new();
    for p in &config.simulated {
        let path = config.resolve(p);
        simulated.extend(
            parse_sessions(&read(&path)?, SessionKind::Simulated)
                .map_err(|e| PipelineError::data(path.display().to_string(), e))?,
        );
    }
    let corpus = build_corpus(real, simulated).map_err(|e| PipelineError::data("sessions", e))?;

    let qrels = match &config.qrels {
        Some(p)
            if ["ndcg", "precision", "recall", "map", "mrr"]
                .iter()
                .any(|m| needs(m)) =>
        {
            let path = config.resolve(p);
            let raw = String::from_utf8_lossy(&read(&path)?).into_owned();
            Some(
                parse_qrels(&raw)
                    .map_err(|e| PipelineError::data(path.display().to_string(), e))?,
            )
        }
        _ => None,
    };
    let wordnet = match &config.wordnet_dir {
        Some(dir) if needs("wordnet") => {
            let dir = config.resolve(dir);
            Some(
                SynsetGraph::load_dir(&dir)
                    .map_err(|e| PipelineError::data(dir.display().to_string(), e))?,
            )
        }
        _ => None,
    };
    let embeddings = match &config.embeddings {
        Some(pc) if needs("cosine") || needs("bert_score") => Some(
            open_provider(pc, &config.base_dir)
                .map_err(|e| PipelineError::data(format!("embeddings {}", pc.location), e))?,
        ),
        _ => None,
    };
    let annotations = match &config.annotations {
        Some(p) => {
            let path = config.resolve(p);
            Some(
                serde_json::from_slice(&read(&path)?)
                    .map_err(|e| PipelineError::data(path.display().to_string(), e))?,
            )
        }
        None => None,
    };
    Ok(Inputs {
        corpus,
        qrels,
        wordnet,
        embeddings,
        annotations,
    })
}

type EmbeddingTable = HashMap<String, Option<EmbeddingMatrix>>;

struct Context<'a> {
    config: &'a RunConfig,
    inputs: &'a Inputs,
    sentence: EmbeddingTable,
    token: EmbeddingTable,
}

fn fetch_all(
    provider: &dyn EmbeddingProvider,
    texts: &[String],
    granularity: Granularity,
) -> Result<EmbeddingTable, PipelineError> {
    let rows = provider
        .fetch(texts, granularity)
        .map_err(|e| PipelineError::data(format!("{} embeddings", granularity.as_str()), e))?;
    Ok(texts.iter().cloned().zip(rows).collect())
}

fn measure_error(pair: &SessionPair, measure: &str, e: impl ToString) -> PipelineError {
    PipelineError::data(
        format!(
            "simulator {} session {} measure {}",
            pair.simulator_id, pair.session_id, measure
        ),
        e,
    )
}

fn compute_pair(
    ctx: &Context<'_>,
    pair: &SessionPair,
    measures: &[&str],
) -> Result<Vec<Option<f64>>, PipelineError> {
    let real_q = pair.real.query();
    let sim_q = pair.simulated.query();
    let real_t: Option<TokenizedQuery> = tokenize(&real_q).ok();
    let sim_t: Option<TokenizedQuery> = tokenize(&sim_q).ok();
    let ranked = || RankedList::new(pair.session_id.clone(), pair.simulated.serp().to_vec());
    let qrels = ctx.inputs.qrels.as_ref();
    let k = ctx.config.k;

    let mut row = Vec::with_capacity(measures.len());
    for &m in measures {
        let value: Option<f64> = match m {
            "query_length_chars" => sim_t.as_ref().map(|t| query_length_chars(t) as f64),
            "query_length_terms" => sim_t.as_ref().map(|t| query_length_terms(t) as f64),
            "unique_terms" => sim_t.as_ref().map(|t| unique_term_count(t) as f64),
            "type_token_ratio" => sim_t.as_ref().map(type_token_ratio),
            "flesch_kincaid" => sim_t.as_ref().map(flesch_kincaid_grade),
            "named_entities" => sim_t.as_ref().map(|t| {
                let ann = ctx.inputs.annotations.as_ref().and_then(|a| a.get(&sim_q));
                named_entity_count(t, ann.map(Vec::as_slice)) as f64
            }),
            "jaccard" => match (&real_t, &sim_t) {
                (Some(a), Some(b)) => jaccard_similarity(a, b),
                _ => None,
            },
            "cosine" => match (&ctx.sentence[&real_q], &ctx.sentence[&sim_q]) {
                (Some(a), Some(b)) => cosine_similarity(a.vector(), b.vector())
                    .map_err(|e| measure_error(pair, m, e))?,
                _ => None,
            },
            "bert_score" => match (&ctx.token[&real_q], &ctx.token[&sim_q]) {
                (Some(a), Some(b)) => bert_score(&a.rows, &b.rows)
                    .map_err(|e| measure_error(pair, m, e))?
                    .map(|s| s.f1),
                _ => None,
            },
            "wordnet" => match (&real_t, &sim_t, &ctx.inputs.wordnet) {
                (Some(a), Some(b), Some(g)) => wordnet_similarity(a, b, g),
                _ => None,
            },
            "ndcg" | "precision" | "recall" | "map" | "mrr" => {
                let r = ranked().map_err(|e| measure_error(pair, m, e))?;
                let q = qrels.expect("qrels loaded for IR metrics");
                match m {
                    "ndcg" => ndcg_at_k(&r, q, k),
                    "precision" => precision_at_k(&r, q, k),
                    "recall" => recall_at_k(&r, q, k),
                    "map" => average_precision(&r, q),
                    _ => reciprocal_rank(&r, q),
                }
            }
            "serp_jaccard" => {
                serp_jaccard(pair.real.serp(), pair.simulated.serp(), ctx.config.serp_k)
            }
            "rbo" => rbo(pair.real.serp(), pair.simulated.serp(), &ctx.config.rbo),
            other => unreachable!("measure `{other}` is not in the catalog"),
        };
        row.push(value);
    }
    Ok(row)
}

/// One simulator's pairs and their measure rows, in pair order.
pub type SimulatorRows = (String, Vec<SessionPair>, Vec<Vec<Option<f64>>>);

/// Computed measures of every pair, grouped per simulator in pair order.
pub struct MeasureRun {
    pub measures: Vec<&'static str>,
    pub pairing: PairingMode,
    pub per_simulator: Vec<SimulatorRows>,
    pub unmatched: Vec<Unmatched>,
}

impl MeasureRun {
    pub fn matrix(&self) -> MeasureMatrix<f64> {
        let mut m = MeasureMatrix::new(self.measures.iter().map(|s| s.to_string()).collect())
            .expect("catalog names are unique");
        for (_, pairs, rows) in &self.per_simulator {
            for (pair, row) in pairs.iter().zip(rows) {
                m.push_row(
                    RowKey {
                        simulator_id: pair.simulator_id.clone(),
                        session_id: pair.session_id.clone(),
                        rank: pair.rank,
                    },
                    row.clone(),
                )
                .expect("row matches measure count");
            }
        }
        m
    }

    pub fn pair_count(&self) -> usize {
        self.per_simulator.iter().map(|(_, p, _)| p.len()).sum()
    }
}

pub fn compute_measures(
    config: &RunConfig,
    inputs: &Inputs,
    measures: &[&'static str],
    mode: PairingMode,
) -> Result<MeasureRun, PipelineError> {
    let pairing = pair_sessions(&inputs.corpus, mode);
    for u in &pairing.unmatched {
        log::warn!(
            "simulator {} has no query for session {}",
            u.simulator_id,
            u.session_id
        );
    }

    let mut ctx = Context {
        config,
        inputs,
        sentence: HashMap::new(),
        token: HashMap::new(),
    };
    if let Some(provider) = &inputs.embeddings {
        let texts: Vec<String> = pairing
            .pairs
            .values()
            .flatten()
            .flat_map(|p| [p.real.query(), p.simulated.query()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if measures.contains(&"cosine") {
            ctx.sentence = fetch_all(provider.as_ref(), &texts, Granularity::Sentence)?;
        }
        if measures.contains(&"bert_score") {
            ctx.token = fetch_all(provider.as_ref(), &texts, Granularity::Token)?;
        }
    }

    let mut per_simulator = Vec::new();
    for (sim, pairs) in pairing.pairs {
        let rows = pairs
            .par_iter()
            .map(|p| compute_pair(&ctx, p, measures))
            .collect::<Result<Vec<_>, _>>()?;
        per_simulator.push((sim, pairs, rows));
    }
    Ok(MeasureRun {
        measures: measures.to_vec(),
        pairing: mode,
        per_simulator,
        unmatched: pairing.unmatched,
    })
}

#[derive(Serialize)]
struct PairRef<'a> {
    session_id: &'a str,
    rank: u32,
    simulated_id: &'a str,
}

struct OrderedMeasures<'a> {
    names: &'a [&'static str],
    rows: &'a [Vec<Option<f64>>],
}

impl Serialize for OrderedMeasures<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.names.len()))?;
        for (j, name) in self.names.iter().enumerate() {
            let column: Vec<Option<f64>> = self.rows.iter().map(|r| r[j]).collect();
            map.serialize_entry(name, &column)?;
        }
        map.end()
    }
}

/// One line of the measure report: a simulator's values in pair order.
#[derive(Serialize)]
struct MeasureReportLine<'a> {
    simulator_id: &'a str,
    pairing: PairingMode,
    pairs: Vec<PairRef<'a>>,
    measures: OrderedMeasures<'a>,
    rbo: RboParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    wordnet_version: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedding_model: Option<&'a str>,
    toolkit: &'static str,
    config_digest: &'a str,
}

pub fn measures_jsonl(
    run: &MeasureRun,
    inputs: &Inputs,
    config: &RunConfig,
    digest: &str,
) -> String {
    let mut out = String::new();
    for (sim, pairs, rows) in &run.per_simulator {
        let line = MeasureReportLine {
            simulator_id: sim,
            pairing: run.pairing,
            pairs: pairs
                .iter()
                .map(|p| PairRef {
                    session_id: &p.session_id,
                    rank: p.rank,
                    simulated_id: &p.simulated.id,
                })
                .collect(),
            measures: OrderedMeasures {
                names: &run.measures,
                rows,
            },
            rbo: config.rbo,
            wordnet_version: inputs.wordnet.as_ref().and_then(|g| g.version()),
            embedding_model: inputs.embeddings.as_ref().map(|p| p.model_id()),
            toolkit: TOOLKIT,
            config_digest: digest,
        };
        out += &serde_json::to_string(&line).expect("report line serializes");
        out.push('\n');
    }
    out
}

/// Writes `measures.jsonl` and `matrix.csv` into `out_dir`.
pub fn write_measure_outputs(
    run: &MeasureRun,
    inputs: &Inputs,
    config: &RunConfig,
    digest: &str,
    out_dir: &Path,
) -> Result<(), PipelineError> {
    let write = |name: &str, body: String| {
        let path = out_dir.join(name);
        write_atomic(&path, body.as_bytes())
            .map_err(|e| PipelineError::data(path.display().to_string(), e))
    };
    write(
        "measures.jsonl",
        measures_jsonl(run, inputs, config, digest),
    )?;
    write("matrix.csv", matrix_csv(digest, &run.matrix()))?;
    Ok(())
}

/// Reads a `matrix.csv` written by [`write_measure_outputs`].
pub fn read_matrix_csv(path: &Path) -> Result<MeasureMatrix<f64>, PipelineError> {
    let ctx = || path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| PipelineError::data(ctx(), e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| PipelineError::data(ctx(), e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < KEY_COLUMNS.len() || header[..KEY_COLUMNS.len()] != KEY_COLUMNS {
        return Err(PipelineError::data(
            ctx(),
            format!("header must start with {}", KEY_COLUMNS.join(",")),
        ));
    }
    let mut m = MeasureMatrix::new(header[KEY_COLUMNS.len()..].to_vec())
        .map_err(|e| PipelineError::data(ctx(), e))?;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| PipelineError::data(ctx(), e))?;
        let at = |msg: String| PipelineError::data(format!("{} row {}", ctx(), line + 1), msg);
        let rank = record[2]
            .parse::<u32>()
            .map_err(|e| at(format!("rank `{}`: {e}", &record[2])))?;
        let values = record
            .iter()
            .skip(KEY_COLUMNS.len())
            .map(|cell| match cell.trim() {
                "" => Ok(None),
                s => s
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|e| at(format!("value `{s}`: {e}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        m.push_row(
            RowKey {
                simulator_id: record[0].to_owned(),
                session_id: record[1].to_owned(),
                rank,
            },
            values,
        )
        .map_err(|e| at(e.to_string()))?;
    }
    Ok(m)
}

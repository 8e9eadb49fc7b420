//! Robustness of the correlation structure to which simulated query is
//! picked per topic: resample one candidate per (simulator, session) and
//! measure how far the correlation matrices move from the top-1 baseline.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::correlation::{correlation_matrix, CorrelationMatrix, CorrelationMethod};
use super::matrix::{MatrixError, MeasureMatrix, RowKey};
use crate::scalar::Scalar;

/// Generator identifier recorded in every report. Iteration `i` draws from
/// `ChaCha8Rng::seed_from_u64(seed)` with its stream set to `i`.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64/stream=iteration";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BootstrapError {
    #[error("bootstrap needs at least one iteration")]
    ZeroIterations,
    #[error("candidate row for {simulator_id}/{session_id} has {got} cells, expected {expected}")]
    RowLength {
        simulator_id: String,
        session_id: String,
        expected: usize,
        got: usize,
    },
    #[error("no candidates for {simulator_id}/{session_id}")]
    EmptyGroup {
        simulator_id: String,
        session_id: String,
    },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    /// Resample among the candidates one simulator produced for a session.
    WithinSimulator,
    /// Resample among the candidates every simulator produced for a session.
    CrossSimulator,
}

impl BootstrapMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BootstrapMode::WithinSimulator => "within_simulator",
            BootstrapMode::CrossSimulator => "cross_simulator",
        }
    }
}

/// Candidates for one (simulator, session), best rank first.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGroup<T> {
    pub simulator_id: String,
    pub session_id: String,
    pub candidates: Vec<Vec<Option<T>>>,
}

/// Precomputed measure rows for every candidate; resampling only re-selects rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTable<T> {
    column_names: Vec<String>,
    groups: Vec<CandidateGroup<T>>,
}

impl<T: Scalar> CandidateTable<T> {
    pub fn new(
        column_names: Vec<String>,
        groups: Vec<CandidateGroup<T>>,
    ) -> Result<Self, BootstrapError> {
        MeasureMatrix::<T>::new(column_names.clone())?;
        for g in &groups {
            if g.candidates.is_empty() {
                return Err(BootstrapError::EmptyGroup {
                    simulator_id: g.simulator_id.clone(),
                    session_id: g.session_id.clone(),
                });
            }
            if let Some(bad) = g.candidates.iter().find(|r| r.len() != column_names.len()) {
                return Err(BootstrapError::RowLength {
                    simulator_id: g.simulator_id.clone(),
                    session_id: g.session_id.clone(),
                    expected: column_names.len(),
                    got: bad.len(),
                });
            }
        }
        Ok(CandidateTable {
            column_names,
            groups,
        })
    }

    /// Groups the rows of a one-to-many matrix by (simulator, session), ordered by rank.
    pub fn from_matrix(m: &MeasureMatrix<T>) -> Self {
        let mut by_group: BTreeMap<(String, String), Vec<(u32, usize)>> = BTreeMap::new();
        for (r, key) in m.row_keys().iter().enumerate() {
            by_group
                .entry((key.simulator_id.clone(), key.session_id.clone()))
                .or_default()
                .push((key.rank, r));
        }
        let groups = by_group
            .into_iter()
            .map(|((simulator_id, session_id), mut rows)| {
                rows.sort();
                CandidateGroup {
                    simulator_id,
                    session_id,
                    candidates: rows.iter().map(|&(_, r)| m.row(r).to_vec()).collect(),
                }
            })
            .collect();
        CandidateTable {
            column_names: m.column_names().to_vec(),
            groups,
        }
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn groups(&self) -> &[CandidateGroup<T>] {
        &self.groups
    }

    /// Matrix of the first-ranked candidate per group.
    pub fn baseline(&self) -> MeasureMatrix<T> {
        self.assemble(self.groups.iter().map(|g| &g.candidates[0]))
    }

    fn assemble<'a>(&'a self, rows: impl Iterator<Item = &'a Vec<Option<T>>>) -> MeasureMatrix<T> {
        let mut m = MeasureMatrix::new(self.column_names.clone()).expect("validated column names");
        for (g, row) in self.groups.iter().zip(rows) {
            m.push_row(
                RowKey {
                    simulator_id: g.simulator_id.clone(),
                    session_id: g.session_id.clone(),
                    rank: 1,
                },
                row.clone(),
            )
            .expect("validated row length");
        }
        m
    }

    // Per group, the candidate pool it samples from.
    fn pools(&self, mode: BootstrapMode) -> Vec<Vec<&Vec<Option<T>>>> {
        match mode {
            BootstrapMode::WithinSimulator => self
                .groups
                .iter()
                .map(|g| g.candidates.iter().collect())
                .collect(),
            BootstrapMode::CrossSimulator => {
                let mut by_session: BTreeMap<&str, Vec<&Vec<Option<T>>>> = BTreeMap::new();
                for g in &self.groups {
                    by_session
                        .entry(g.session_id.as_str())
                        .or_default()
                        .extend(g.candidates.iter());
                }
                self.groups
                    .iter()
                    .map(|g| by_session[g.session_id.as_str()].clone())
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub iterations: usize,
    pub seed: u64,
    pub mode: BootstrapMode,
}

/// Distribution of one matrix entry's absolute deviation over iterations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDeviation<T> {
    pub a: String,
    pub b: String,
    pub method: CorrelationMethod,
    /// Iterations in which both the baseline and resampled entry were defined.
    pub n: usize,
    pub q50: Option<T>,
    pub q90: Option<T>,
    pub q95: Option<T>,
    pub max: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapReport<T> {
    pub iterations: usize,
    pub seed: u64,
    pub rng: String,
    pub mode: BootstrapMode,
    /// Largest absolute entry deviation per method ("pearson", "kendall").
    pub max_abs_deviation: BTreeMap<String, T>,
    pub deviation_quantiles: Vec<PairDeviation<T>>,
    /// Groups whose pool holds more than one candidate.
    pub resampled_groups: usize,
    pub warnings: Vec<String>,
}

const METHODS: [CorrelationMethod; 2] = [CorrelationMethod::Pearson, CorrelationMethod::Kendall];

/// Nearest-rank quantile of ascending values.
pub fn nearest_rank<T: Scalar>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

fn deviations<T: Scalar>(
    base: &CorrelationMatrix<T>,
    other: &CorrelationMatrix<T>,
    pairs: &[(usize, usize)],
) -> Vec<Option<T>> {
    pairs
        .iter()
        .map(|&(i, j)| Some((other.get(i, j)? - base.get(i, j)?).abs()))
        .collect()
}

pub fn bootstrap_correlations<T: Scalar>(
    table: &CandidateTable<T>,
    opts: &BootstrapOptions,
) -> Result<BootstrapReport<T>, BootstrapError> {
    if opts.iterations == 0 {
        return Err(BootstrapError::ZeroIterations);
    }
    let names = table.column_names();
    let pairs = upper_pairs(names.len());
    let pools = table.pools(opts.mode);
    let resampled_groups = pools.iter().filter(|p| p.len() > 1).count();
    let mut warnings = Vec::new();

    // per method, per iteration, per pair
    let per_iteration: Vec<[Vec<Option<T>>; 2]> = if resampled_groups == 0 {
        warnings.push(format!(
            "no session has more than one candidate in {} mode; all deviations are 0",
            opts.mode.as_str()
        ));
        let base = table.baseline();
        let zero = METHODS.map(|method| {
            let c = correlation_matrix(&base, method);
            deviations(&c, &c, &pairs)
        });
        vec![zero; opts.iterations]
    } else {
        let base = table.baseline();
        let baseline = METHODS.map(|method| correlation_matrix(&base, method));
        (0..opts.iterations)
            .into_par_iter()
            .map(|it| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(it as u64);
                let picks: Vec<&Vec<Option<T>>> = pools
                    .iter()
                    .map(|pool| {
                        if pool.len() == 1 {
                            pool[0]
                        } else {
                            pool[rng.random_range(0..pool.len())]
                        }
                    })
                    .collect();
                let sample = table.assemble(picks.into_iter());
                [0, 1].map(|k| {
                    deviations(
                        &baseline[k],
                        &correlation_matrix(&sample, METHODS[k]),
                        &pairs,
                    )
                })
            })
            .collect()
    };

    let mut max_abs_deviation = BTreeMap::new();
    let mut deviation_quantiles = Vec::new();
    for (k, method) in METHODS.iter().enumerate() {
        let mut method_max = T::zero();
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let mut values: Vec<T> = per_iteration.iter().filter_map(|it| it[k][p]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            if let Some(&m) = values.last() {
                method_max = method_max.max(m);
            }
            deviation_quantiles.push(PairDeviation {
                a: names[i].clone(),
                b: names[j].clone(),
                method: *method,
                n: values.len(),
                q50: nearest_rank(&values, 0.5),
                q90: nearest_rank(&values, 0.9),
                q95: nearest_rank(&values, 0.95),
                max: values.last().copied(),
            });
        }
        max_abs_deviation.insert(method.as_str().to_string(), method_max);
    }

    Ok(BootstrapReport {
        iterations: opts.iterations,
        seed: opts.seed,
        rng: RNG_ALGORITHM.to_string(),
        mode: opts.mode,
        max_abs_deviation,
        deviation_quantiles,
        resampled_groups,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(sim: &str, session: &str, rows: &[[f64; 2]]) -> CandidateGroup<f64> {
        CandidateGroup {
            simulator_id: sim.into(),
            session_id: session.into(),
            candidates: rows
                .iter()
                .map(|r| r.iter().map(|&v| Some(v)).collect())
                .collect(),
        }
    }

    fn table(multi: bool) -> CandidateTable<f64> {
        let extra: &[[f64; 2]] = if multi {
            &[[9.0, 0.0], [4.0, 4.0]]
        } else {
            &[]
        };
        let groups = (0..5)
            .map(|t| {
                let mut rows = vec![[t as f64, (t * t) as f64]];
                if t == 2 {
                    rows.extend_from_slice(extra);
                }
                group("s1", &format!("t{t}"), &rows)
            })
            .collect();
        CandidateTable::new(vec!["a".into(), "b".into()], groups).unwrap()
    }

    fn opts(mode: BootstrapMode) -> BootstrapOptions {
        BootstrapOptions {
            iterations: 200,
            seed: 7,
            mode,
        }
    }

    #[test]
    fn nearest_rank_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(nearest_rank(&v, 0.5), Some(2.0));
        assert_eq!(nearest_rank(&v, 0.9), Some(4.0));
        assert_eq!(nearest_rank::<f64>(&[], 0.5), None);
    }

    #[test]
    fn single_candidates_give_zero_deviation() {
        let r =
            bootstrap_correlations(&table(false), &opts(BootstrapMode::WithinSimulator)).unwrap();
        assert_eq!(r.max_abs_deviation["pearson"], 0.0);
        assert_eq!(r.max_abs_deviation["kendall"], 0.0);
        assert_eq!(r.resampled_groups, 0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn resampling_moves_correlations_deterministically() {
        let t = table(true);
        let a = bootstrap_correlations(&t, &opts(BootstrapMode::WithinSimulator)).unwrap();
        let b = bootstrap_correlations(&t, &opts(BootstrapMode::WithinSimulator)).unwrap();
        assert_eq!(a, b);
        assert!(a.max_abs_deviation["pearson"] > 0.0);
        assert_eq!(a.deviation_quantiles.len(), 2);
        assert_eq!(a.deviation_quantiles[0].n, 200);
    }

    #[test]
    fn cross_mode_pools_simulators() {
        let groups = vec![
            group("s1", "t1", &[[1.0, 1.0]]),
            group("s2", "t1", &[[5.0, 0.0]]),
        ];
        let t = CandidateTable::new(vec!["a".into(), "b".into()], groups).unwrap();
        let pools = t.pools(BootstrapMode::CrossSimulator);
        assert_eq!(pools[0].len(), 2);
        assert_eq!(t.pools(BootstrapMode::WithinSimulator)[0].len(), 1);
    }

    #[test]
    fn zero_iterations_rejected() {
        let o = BootstrapOptions {
            iterations: 0,
            ..opts(BootstrapMode::WithinSimulator)
        };
        assert_eq!(
            bootstrap_correlations(&table(true), &o),
            Err(BootstrapError::ZeroIterations)
        );
    }

    #[test]
    fn from_matrix_orders_by_rank() {
        let mut m = MeasureMatrix::new(vec!["a".into()]).unwrap();
        for (rank, v) in [(2, 20.0), (1, 10.0)] {
            m.push_row(
                RowKey {
                    simulator_id: "s".into(),
                    session_id: "t".into(),
                    rank,
                },
                vec![Some(v)],
            )
            .unwrap();
        }
        let t = CandidateTable::from_matrix(&m);
        assert_eq!(
            t.groups()[0].candidates,
            vec![vec![Some(10.0)], vec![Some(20.0)]]
        );
    }
}

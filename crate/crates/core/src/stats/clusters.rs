//! Mean correlation inside and between groups of related measures, averaged
//! first over measure pairs within each matrix, then across matrices.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::correlation::{CorrelationMatrix, CorrelationMethod};
use crate::scalar::{mean, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error("cluster `{cluster}` references unknown column `{column}` (matrix {matrix})")]
    UnknownColumn {
        cluster: String,
        column: String,
        matrix: usize,
    },
    #[error("no correlation matrices given")]
    NoMatrices,
    #[error("matrices mix correlation methods")]
    MixedMethods,
}

/// Cluster name → member measures.
pub type ClusterDefinitions = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterMean<T> {
    /// Unweighted mean of the per-matrix means that are defined.
    pub mean: Option<T>,
    pub per_matrix: Vec<Option<T>>,
    /// Defined pair entries summed over matrices.
    pub pairs_used: usize,
    /// Undefined (masked) pair entries summed over matrices.
    pub pairs_masked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossClusterMean<T> {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub value: ClusterMean<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAverages<T> {
    pub method: CorrelationMethod,
    pub clusters: ClusterDefinitions,
    pub within: BTreeMap<String, ClusterMean<T>>,
    pub cross: Vec<CrossClusterMean<T>>,
}

fn aggregate<T: Scalar>(
    corrs: &[CorrelationMatrix<T>],
    pairs_of: impl Fn(&CorrelationMatrix<T>) -> Vec<(usize, usize)>,
) -> ClusterMean<T> {
    let (mut used, mut masked) = (0, 0);
    let per_matrix: Vec<Option<T>> = corrs
        .iter()
        .map(|c| {
            let values: Vec<T> = pairs_of(c)
                .into_iter()
                .filter_map(|(i, j)| {
                    let v = c.get(i, j);
                    if v.is_some() {
                        used += 1;
                    } else {
                        masked += 1;
                    }
                    v
                })
                .collect();
            mean(values)
        })
        .collect();
    let defined: Vec<T> = per_matrix.iter().flatten().copied().collect();
    ClusterMean {
        mean: mean(defined),
        per_matrix,
        pairs_used: used,
        pairs_masked: masked,
    }
}

pub fn cluster_average_correlation<T: Scalar>(
    corrs: &[CorrelationMatrix<T>],
    clusters: &ClusterDefinitions,
) -> Result<ClusterAverages<T>, ClusterError> {
    let method = corrs.first().ok_or(ClusterError::NoMatrices)?.method;
    if corrs.iter().any(|c| c.method != method) {
        return Err(ClusterError::MixedMethods);
    }
    for (k, c) in corrs.iter().enumerate() {
        for (cluster, members) in clusters {
            if let Some(column) = members.iter().find(|m| c.index_of(m).is_none()) {
                return Err(ClusterError::UnknownColumn {
                    cluster: cluster.clone(),
                    column: column.clone(),
                    matrix: k,
                });
            }
        }
    }
    let indices = |c: &CorrelationMatrix<T>, members: &[String]| -> Vec<usize> {
        members
            .iter()
            .map(|m| c.index_of(m).expect("validated member"))
            .collect()
    };

    let within = clusters
        .iter()
        .map(|(name, members)| {
            let value = aggregate(corrs, |c| {
                let idx = indices(c, members);
                let mut pairs = Vec::new();
                for (x, &i) in idx.iter().enumerate() {
                    for &j in &idx[x + 1..] {
                        if i != j {
                            pairs.push((i, j));
                        }
                    }
                }
                pairs
            });
            (name.clone(), value)
        })
        .collect();

    let names: Vec<&String> = clusters.keys().collect();
    let mut cross = Vec::new();
    for (x, a) in names.iter().enumerate() {
        for b in &names[x + 1..] {
            let value = aggregate(corrs, |c| {
                let (ia, ib) = (indices(c, &clusters[*a]), indices(c, &clusters[*b]));
                let mut pairs = Vec::new();
                for &i in &ia {
                    for &j in &ib {
                        if i != j {
                            pairs.push((i, j));
                        }
                    }
                }
                pairs
            });
            cross.push(CrossClusterMean {
                a: (*a).clone(),
                b: (*b).clone(),
                value,
            });
        }
    }

    Ok(ClusterAverages {
        method,
        clusters: clusters.clone(),
        within,
        cross,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(names: &[&str], upper: &[Option<f64>]) -> CorrelationMatrix<f64> {
        let n = names.len();
        let mut values = vec![Some(1.0); n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                values[i * n + j] = upper[k];
                values[j * n + i] = upper[k];
                k += 1;
            }
        }
        CorrelationMatrix::from_entries(
            CorrelationMethod::Pearson,
            names.iter().map(|s| s.to_string()).collect(),
            values,
            vec![10; n * n],
        )
    }

    fn defs(entries: &[(&str, &[&str])]) -> ClusterDefinitions {
        entries
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    #[test]
    fn hand_mean_of_three_pairs() {
        let c = matrix(&["A", "B", "C"], &[Some(0.6), Some(0.8), Some(1.0)]);
        let r = cluster_average_correlation(&[c], &defs(&[("x", &["A", "B", "C"])])).unwrap();
        let m = r.within["x"].mean.unwrap();
        assert!((m - 0.8).abs() < 1e-15);
        assert_eq!(r.within["x"].pairs_used, 3);
    }

    #[test]
    fn averages_across_matrices_unweighted() {
        let c1 = matrix(&["A", "B", "C"], &[Some(1.0), Some(0.0), Some(0.0)]);
        let c2 = matrix(&["A", "B", "C"], &[Some(0.5), None, None]);
        let d = defs(&[("x", &["A", "B"]), ("y", &["C"])]);
        let r = cluster_average_correlation(&[c1, c2], &d).unwrap();
        assert_eq!(r.within["x"].mean, Some(0.75));
        assert_eq!(r.within["y"].mean, None);
        assert_eq!(r.cross[0].value.per_matrix, vec![Some(0.0), None]);
        assert_eq!(r.cross[0].value.pairs_masked, 2);
        assert_eq!(r.cross[0].value.mean, Some(0.0));
    }

    #[test]
    fn unknown_column_is_an_error() {
        let c = matrix(&["A", "B"], &[Some(1.0)]);
        assert!(matches!(
            cluster_average_correlation(&[c], &defs(&[("x", &["A", "Z"])])),
            Err(ClusterError::UnknownColumn { .. })
        ));
    }
}

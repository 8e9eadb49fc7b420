//! Relationship analysis over a measure matrix: correlations, mutual
//! information, factor analysis, bootstrap robustness and cluster averages.

use thiserror::Error;

pub mod bootstrap;
pub mod clusters;
pub mod correlation;
pub mod efa;
pub mod linalg;
pub mod matrix;
pub mod nmi;

pub use bootstrap::{
    bootstrap_correlations, BootstrapError, BootstrapMode, BootstrapOptions, BootstrapReport,
    CandidateGroup, CandidateTable, PairDeviation, RNG_ALGORITHM,
};
pub use clusters::{
    cluster_average_correlation, ClusterAverages, ClusterDefinitions, ClusterError, ClusterMean,
    CrossClusterMean,
};
pub use correlation::{
    correlate, correlation_matrix, kendall_counts, kendall_tau_b, pearson, CorrelationMatrix,
    CorrelationMethod, KendallCounts,
};
pub use efa::{efa, varimax, varimax_criterion, EfaError, EfaOptions, FactorSolution};
pub use linalg::DenseMatrix;
pub use matrix::{pairwise_complete, MatrixError, MeasureMatrix, RowKey};
pub use nmi::{
    default_bins, equal_frequency_bins, flag_nonlinear, nmi, nmi_matrix, nmi_report,
    FlagThresholds, FlaggedPair, NmiMatrix, NmiReport,
};

/// Why a statistic has no value for the given series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Undefined {
    #[error("{n} complete observations, need at least {required}")]
    TooFewObservations { n: usize, required: usize },
    #[error("a series is constant")]
    Constant,
}

//! Validation of simulated search queries against real ones: per-pair
//! measures (query statistics, query similarity, retrieval effectiveness,
//! SERP overlap) and the statistics that relate them.
//!
//! Numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below name the instantiations the pipeline uses.

pub mod embedding;
pub mod http;
pub mod retrieval;
pub mod scalar;
pub mod serp;
pub mod session;
pub mod similarity;
pub mod stats;
pub mod text;
pub mod wordnet;

pub use scalar::Scalar;

pub type MeasureMatrixF64 = stats::MeasureMatrix<f64>;
pub type CorrelationMatrixF64 = stats::CorrelationMatrix<f64>;
pub type NmiReportF64 = stats::NmiReport<f64>;
pub type FactorSolutionF64 = stats::FactorSolution<f64>;
pub type BootstrapReportF64 = stats::BootstrapReport<f64>;
pub type ClusterAveragesF64 = stats::ClusterAverages<f64>;
pub type CandidateTableF64 = stats::CandidateTable<f64>;
pub type BertScoreF64 = similarity::BertScore<f64>;

//! Pipeline for validating simulated search queries against real ones:
//! measure computation, correlation and factor analysis, and bootstrap
//! stability of the resulting correlations.

pub mod analysis;
pub mod augment;
pub mod catalog;
pub mod config;
pub mod error;
pub mod measures;
pub mod output;
pub mod pipeline;

pub use config::{ConfigError, Overrides, RunConfig};
pub use error::PipelineError;

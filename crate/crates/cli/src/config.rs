//! Run configuration: one JSON file, overridable from the command line.

use std::path::{Path, PathBuf};

use qsim_core::embedding::ProviderConfig;
use qsim_core::serp::RboParams;
use qsim_core::session::PairingMode;
use qsim_core::stats::{BootstrapMode, ClusterDefinitions, EfaOptions, FlagThresholds};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::{self, Dependency};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("no {0} given")]
    Missing(&'static str),
    #[error("measure `{measure}` needs {dependency}, which is not configured")]
    UnmetDependency {
        measure: String,
        dependency: Dependency,
    },
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EfaSettings {
    /// Restrict the factor analysis to these measures (all columns when unset).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
    /// Factors to retain; Kaiser criterion when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_factors: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    pub max_missing: f64,
    pub rotate: bool,
}

impl Default for EfaSettings {
    fn default() -> Self {
        let o = EfaOptions::default();
        EfaSettings {
            columns: None,
            n_factors: o.n_factors,
            max_iter: o.max_iter,
            tol: o.tol,
            max_missing: o.max_missing,
            rotate: o.rotate,
        }
    }
}

impl EfaSettings {
    pub fn options(&self) -> EfaOptions {
        EfaOptions {
            n_factors: self.n_factors,
            max_iter: self.max_iter,
            tol: self.tol,
            max_missing: self.max_missing,
            rotate: self.rotate,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NmiSettings {
    /// Bin count; ⌈√n⌉ of the pairwise-complete size when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    pub thresholds: FlagThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSettings {
    pub iterations: usize,
    pub modes: Vec<BootstrapMode>,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        BootstrapSettings {
            iterations: 1000,
            modes: vec![
                BootstrapMode::WithinSimulator,
                BootstrapMode::CrossSimulator,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Documents requested per query.
    pub k: usize,
    pub max_in_flight: usize,
    pub timeout_ms: u64,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings {
            endpoint: None,
            k: 10,
            max_in_flight: 4,
            timeout_ms: 30_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub real: Option<PathBuf>,
    pub simulated: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qrels: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wordnet_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<ProviderConfig>,
    /// JSON object mapping a query string to its named entities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotations: Option<PathBuf>,
    pub pairing: PairingMode,
    /// Measures to compute; every measure whose inputs are configured when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measures: Option<Vec<String>>,
    /// Cutoff for P@k, R@k and nDCG@k.
    pub k: usize,
    /// Cutoff for SERP Jaccard; whole SERPs when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub serp_k: Option<usize>,
    pub rbo: RboParams,
    pub nmi: NmiSettings,
    pub efa: EfaSettings,
    pub bootstrap: BootstrapSettings,
    /// Measure groups for cluster averages; the taxonomy groups when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clusters: Option<ClusterDefinitions>,
    pub heatmap: bool,
    pub augment: AugmentSettings,
    pub out: PathBuf,
    pub seed: u64,

    /// Directory relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            real: None,
            simulated: Vec::new(),
            qrels: None,
            wordnet_dir: None,
            embeddings: None,
            annotations: None,
            pairing: PairingMode::OneToOne,
            measures: None,
            k: 10,
            serp_k: None,
            rbo: RboParams::default(),
            nmi: NmiSettings::default(),
            efa: EfaSettings::default(),
            bootstrap: BootstrapSettings::default(),
            clusters: None,
            heatmap: false,
            augment: AugmentSettings::default(),
            out: PathBuf::from("out"),
            seed: 0,
            base_dir: PathBuf::from("."),
        }
    }
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub real: Option<PathBuf>,
    pub simulated: Vec<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub pairing: Option<PairingMode>,
    pub heatmap: bool,
    pub k: Option<usize>,
    pub rbo_p: Option<f64>,
    pub endpoint: Option<String>,
}

fn absolute(p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        std::env::current_dir().map(|d| d.join(&p)).unwrap_or(p)
    }
}

impl RunConfig {
    pub fn from_json(raw: &str, origin: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(raw);
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            path: origin.to_owned(),
            message: format!("{} at `{}`", e.inner(), e.path()),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::from_json(&raw, &path.display().to_string())?;
        config.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(config)
    }

    /// Applies flags; flag paths are taken relative to the working directory.
    pub fn apply(&mut self, o: Overrides) -> Result<(), ConfigError> {
        if let Some(p) = o.real {
            self.real = Some(absolute(p));
        }
        if !o.simulated.is_empty() {
            self.simulated = o.simulated.into_iter().map(absolute).collect();
        }
        if let Some(p) = o.qrels {
            self.qrels = Some(absolute(p));
        }
        if let Some(p) = o.out {
            self.out = absolute(p);
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.pairing {
            self.pairing = m;
        }
        if o.heatmap {
            self.heatmap = true;
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(p) = o.rbo_p {
            self.rbo.p = p;
        }
        if let Some(e) = o.endpoint {
            self.augment.endpoint = Some(e);
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out)
    }

    /// Measures this run computes, in catalog order.
    pub fn enabled_measures(&self) -> Result<Vec<&'static str>, ConfigError> {
        let available = |d: Dependency| match d {
            Dependency::Qrels => self.qrels.is_some(),
            Dependency::WordNet => self.wordnet_dir.is_some(),
            Dependency::Embeddings => self.embeddings.is_some(),
        };
        match &self.measures {
            None => Ok(catalog::MEASURES
                .iter()
                .filter(|m| m.dependency.is_none_or(available))
                .map(|m| m.name)
                .collect()),
            Some(list) => {
                for name in list {
                    let m = catalog::lookup(name)
                        .ok_or_else(|| ConfigError::UnknownMeasure(name.clone()))?;
                    if let Some(d) = m.dependency.filter(|&d| !available(d)) {
                        return Err(ConfigError::UnmetDependency {
                            measure: name.clone(),
                            dependency: d,
                        });
                    }
                }
                Ok(catalog::MEASURES
                    .iter()
                    .filter(|m| list.iter().any(|n| n == m.name))
                    .map(|m| m.name)
                    .collect())
            }
        }
    }

    /// Checks everything `measure` needs before any file is read.
    pub fn validate_for_measure(&self) -> Result<Vec<&'static str>, ConfigError> {
        if self.real.is_none() {
            return Err(ConfigError::Missing("real sessions (--real)"));
        }
        if self.simulated.is_empty() {
            return Err(ConfigError::Missing("simulated sessions (--simulated)"));
        }
        if self.k == 0 {
            return Err(ConfigError::Invalid(
                "metric cutoff k must be at least 1".into(),
            ));
        }
        if self.serp_k == Some(0) {
            return Err(ConfigError::Invalid("serp_k must be at least 1".into()));
        }
        RboParams::new(self.rbo.p, self.rbo.depth, self.rbo.variant)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.rbo.depth == 0 {
            return Err(ConfigError::Invalid("RBO depth must be at least 1".into()));
        }
        self.enabled_measures()
    }

    pub fn validate_for_bootstrap(&self) -> Result<(), ConfigError> {
        if self.bootstrap.iterations == 0 {
            return Err(ConfigError::Invalid(
                "bootstrap iterations must be at least 1".into(),
            ));
        }
        if self.bootstrap.modes.is_empty() {
            return Err(ConfigError::Invalid("no bootstrap mode selected".into()));
        }
        Ok(())
    }

    /// SHA-256 of the serialized effective configuration. The output
    /// directory is left out: where results go does not change them.
    pub fn digest(&self) -> String {
        let mut echo = self.clone();
        echo.out = PathBuf::new();
        let body = serde_json::to_vec(&echo).expect("config serializes");
        hex::encode(Sha256::digest(&body))
    }
}

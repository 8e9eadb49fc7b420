//! The pipeline stages behind each subcommand.

use std::path::{Path, PathBuf};

use qsim_core::session::PairingMode;
use qsim_core::stats::{bootstrap_correlations, BootstrapOptions, CandidateTable, MeasureMatrix};
use serde_json::json;

use crate::analysis::{analyze, AnalysisOutcome};
use crate::config::RunConfig;
use crate::error::PipelineError;
use crate::measures::{
    compute_measures, load_inputs, read_matrix_csv, write_measure_outputs, Inputs, MeasureRun,
};
use crate::output::{to_json, write_atomic};

pub struct Measured {
    pub measures: Vec<&'static str>,
    pub inputs: Inputs,
    pub run: MeasureRun,
}

/// Computes measures under the configured pairing and writes
/// `measures.jsonl` and `matrix.csv`.
pub fn measure(config: &RunConfig) -> Result<Measured, PipelineError> {
    let measures = config.validate_for_measure()?;
    let inputs = load_inputs(config, &measures)?;
    let run = compute_measures(config, &inputs, &measures, config.pairing)?;
    write_measure_outputs(&run, &inputs, config, &config.digest(), &config.out_dir())?;
    Ok(Measured {
        measures,
        inputs,
        run,
    })
}

/// Loads extra datasets for cluster averages, labelled by file name.
pub fn load_datasets(
    paths: &[PathBuf],
) -> Result<Vec<(String, MeasureMatrix<f64>)>, PipelineError> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), read_matrix_csv(p)?)))
        .collect()
}

pub fn analyze_matrix(
    config: &RunConfig,
    matrix: &MeasureMatrix<f64>,
    datasets: &[(String, MeasureMatrix<f64>)],
) -> Result<AnalysisOutcome, PipelineError> {
    analyze(
        matrix,
        datasets,
        config,
        &config.digest(),
        &config.out_dir(),
    )
}

/// Analyses a matrix file (default: `matrix.csv` in the output directory).
pub fn analyze_file(
    config: &RunConfig,
    matrix: Option<&Path>,
    datasets: &[PathBuf],
) -> Result<AnalysisOutcome, PipelineError> {
    let path = matrix.map_or_else(|| config.out_dir().join("matrix.csv"), Path::to_path_buf);
    let m = read_matrix_csv(&path)?;
    analyze_matrix(config, &m, &load_datasets(datasets)?)
}

/// Resamples candidate queries and writes `bootstrap.json`, one report per mode.
pub fn bootstrap_with(
    config: &RunConfig,
    inputs: &Inputs,
    measures: &[&'static str],
    existing: Option<&MeasureRun>,
) -> Result<(), PipelineError> {
    config.validate_for_bootstrap()?;
    let owned;
    let run = match existing {
        Some(run) if run.pairing == PairingMode::OneToMany => run,
        _ => {
            owned = compute_measures(config, inputs, measures, PairingMode::OneToMany)?;
            &owned
        }
    };
    let table = CandidateTable::from_matrix(&run.matrix());
    let reports = config
        .bootstrap
        .modes
        .iter()
        .map(|&mode| {
            let report = bootstrap_correlations(
                &table,
                &BootstrapOptions {
                    iterations: config.bootstrap.iterations,
                    seed: config.seed,
                    mode,
                },
            )
            .map_err(|e| PipelineError::Analysis(e.to_string()))?;
            for warning in &report.warnings {
                log::warn!("bootstrap ({}): {warning}", mode.as_str());
            }
            Ok(report)
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let path = config.out_dir().join("bootstrap.json");
    write_atomic(
        &path,
        &to_json(&config.digest(), json!({ "reports": reports })),
    )
    .map_err(|e| PipelineError::data(path.display().to_string(), e))
}

pub fn bootstrap(config: &RunConfig) -> Result<(), PipelineError> {
    config.validate_for_bootstrap()?;
    let measures = config.validate_for_measure()?;
    let inputs = load_inputs(config, &measures)?;
    bootstrap_with(config, &inputs, &measures, None)
}

/// Measure, analyse and bootstrap in one pass.
pub fn report(config: &RunConfig, datasets: &[PathBuf]) -> Result<AnalysisOutcome, PipelineError> {
    config.validate_for_bootstrap()?;
    let datasets = load_datasets(datasets)?;
    let measured = measure(config)?;
    let outcome = analyze_matrix(config, &measured.run.matrix(), &datasets)?;
    bootstrap_with(
        config,
        &measured.inputs,
        &measured.measures,
        Some(&measured.run),
    )?;
    Ok(outcome)
}

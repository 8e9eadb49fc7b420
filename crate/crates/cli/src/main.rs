use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsim::analysis::AnalysisOutcome;
use qsim::{pipeline, Overrides, PipelineError, RunConfig};
use qsim_core::session::PairingMode;

#[derive(Parser)]
#[command(
    name = "qsim",
    version,
    about = "Validate simulated search queries against real ones"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Real sessions file.
    #[arg(long)]
    real: Option<PathBuf>,
    /// Simulated sessions file (repeatable).
    #[arg(long)]
    simulated: Vec<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// one-to-one or one-to-many.
    #[arg(long)]
    pairing: Option<PairingMode>,
    /// Also render the Pearson matrix as heatmap.svg.
    #[arg(long)]
    heatmap: bool,
    /// Cutoff for the rank-based IR metrics.
    #[arg(long)]
    k: Option<usize>,
    /// RBO persistence.
    #[arg(long)]
    rbo_p: Option<f64>,
    /// Retrieval service for `augment`.
    #[arg(long)]
    endpoint: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Fill empty SERPs from a retrieval service.
    Augment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Compute measures for every real/simulated pair.
    Measure {
        #[command(flatten)]
        common: Common,
    },
    /// Correlation, NMI, factor and cluster analysis of a measure matrix.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Matrix to analyse; `matrix.csv` in the output directory by default.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Further matrices that enter the cluster averages (repeatable).
        #[arg(long)]
        dataset: Vec<PathBuf>,
    },
    /// Bootstrap stability of the correlation matrices.
    Bootstrap {
        #[command(flatten)]
        common: Common,
    },
    /// Measure, analyse and bootstrap in one run.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: Vec<PathBuf>,
    },
}

impl Common {
    fn config(self) -> Result<RunConfig, PipelineError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        config.apply(Overrides {
            real: self.real,
            simulated: self.simulated,
            qrels: self.qrels,
            out: self.out,
            seed: self.seed,
            pairing: self.pairing,
            heatmap: self.heatmap,
            k: self.k,
            rbo_p: self.rbo_p,
            endpoint: self.endpoint,
        })?;
        Ok(config)
    }
}

fn finish(outcome: AnalysisOutcome) -> Result<(), PipelineError> {
    for path in &outcome.written {
        log::info!("wrote {}", path.display());
    }
    match outcome.failures.as_slice() {
        [] => Ok(()),
        failures => Err(PipelineError::Analysis(
            failures
                .iter()
                .map(|(artifact, msg)| format!("{artifact}: {msg}"))
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Augment {
            common,
            input,
            output,
        } => {
            let config = common.config()?;
            let filled = qsim::augment::augment_file(&input, &output, &config.augment)?;
            log::info!("filled {filled} SERPs into {}", output.display());
            Ok(())
        }
        Command::Measure { common } => {
            let config = common.config()?;
            let measured = pipeline::measure(&config)?;
            log::info!(
                "measured {} pairs into {}",
                measured.run.pair_count(),
                config.out_dir().display()
            );
            Ok(())
        }
        Command::Analyze {
            common,
            matrix,
            dataset,
        } => {
            let config = common.config()?;
            finish(pipeline::analyze_file(
                &config,
                matrix.as_deref(),
                &dataset,
            )?)
        }
        Command::Bootstrap { common } => pipeline::bootstrap(&common.config()?),
        Command::Report { common, dataset } => {
            let config = common.config()?;
            finish(pipeline::report(&config, &dataset)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // Usage errors are configuration errors (exit 1); help and version exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lcml_cli::commands::{self, RunOptions};
use lcml_cli::config::{Format, SynthSpec};
use lcml_cli::error::{CliError, EXIT_OK, EXIT_USAGE};
use lcml_core::augment::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "lcml", version, about = "Transit classification experiments on light-curve CSVs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a dataset file and print its shape and class counts.
    Validate {
        dataset: PathBuf,
    },
    /// Write a synthetic box-transit dataset as CSV.
    Synth {
        /// TOML file with synth fields (positives, negatives, length, seed, [ranges]).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        positives: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an augmentation pipeline over a dataset and write the result.
    Augment {
        dataset: PathBuf,
        /// TOML file with an [augment] table; the default pipeline when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and write its reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the split and augmentation seeds.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report formats, overriding the config (repeat or comma-separate).
        #[arg(long, value_enum, value_delimiter = ',')]
        format: Vec<Format>,
    },
    /// Score a dataset with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        dataset: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LCML_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("LCML_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn read_synth_spec(path: &PathBuf) -> Result<SynthSpec, CliError> {
    let bad = |message: String| CliError::Config {
        path: path.clone(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    toml::from_str(&text).map_err(|e| bad(e.to_string()))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    let print = |out: &mut std::io::StdoutLock, s: &str| {
        out.write_all(s.as_bytes())
            .map_err(|e| CliError::output("<stdout>", e))
    };
    match command {
        Command::Validate { dataset } => {
            let line = commands::validate(&dataset)?;
            print(&mut stdout, &format!("{line}\n"))
        }
        Command::Synth {
            config,
            positives,
            negatives,
            length,
            seed,
            out,
        } => {
            let mut spec = match &config {
                Some(p) => read_synth_spec(p)?,
                None => SynthSpec::default(),
            };
            spec.positives = positives.unwrap_or(spec.positives);
            spec.negatives = negatives.unwrap_or(spec.negatives);
            spec.length = length.unwrap_or(spec.length);
            spec.seed = seed.unwrap_or(spec.seed);
            let digest = commands::synth(&spec, &out)?;
            print(
                &mut stdout,
                &format!(
                    "wrote {} ({} rows, sha256 {digest})\n",
                    out.display(),
                    spec.positives + spec.negatives
                ),
            )
        }
        Command::Augment {
            dataset,
            config,
            seed,
            out,
        } => {
            let mut pipeline = match &config {
                Some(p) => commands::load_pipeline(p)?,
                None => PipelineConfig::leak_free(0),
            };
            if let Some(s) = seed {
                pipeline.seed = s;
            }
            let ds = commands::augment(&dataset, &pipeline, &out)?;
            print(
                &mut stdout,
                &format!("wrote {}: {}\n", out.display(), commands::summary(&ds)),
            )
        }
        Command::Run {
            config,
            seed,
            out,
            format,
        } => {
            let opts = RunOptions {
                seed,
                out,
                formats: (!format.is_empty()).then_some(format),
            };
            let summary = commands::run_experiment(&config, &opts)?;
            let mut text = String::new();
            for st in &summary.stages {
                for m in &st.models {
                    text.push_str(&format!(
                        "{:<24} accuracy {:.3}  precision {:.3}  recall {:.3}  f1 {:.3}\n",
                        m.display_name, m.metrics.accuracy, m.metrics.precision, m.metrics.recall, m.metrics.f1
                    ));
                }
            }
            text.push_str(&format!("reports in {}\n", summary.out_dir.display()));
            print(&mut stdout, &text)
        }
        Command::Predict { model, dataset, out } => {
            let csv = commands::predict(&model, &dataset)?;
            match out {
                Some(path) => std::fs::write(&path, csv).map_err(|e| CliError::output(&path, e)),
                None => print(&mut stdout, &csv),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    let result = configure_threads().and_then(|()| dispatch(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lcml: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

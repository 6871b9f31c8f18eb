use std::path::PathBuf;
use std::process::ExitCode;

use aac_core::pipeline::{self, PipelineConfig};
use aac_core::stats::read_report;
use aac_core::Error;
use clap::{Parser, Subcommand};

/// Landscape-aware configuration of a modular CMA-ES.
#[derive(Debug, Parser)]
#[command(name = "aac", version)]
struct Cli {
    /// Pipeline configuration (JSON); missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the pool of training functions.
    Generate,
    /// Tune the optimizer on each training function and screen the results.
    Label,
    /// Fit the feature pipeline and the configuration predictor.
    Train,
    /// Predict a configuration from a sample CSV (coordinates, then the objective value).
    Predict { doe: PathBuf },
    /// Compare predicted configurations with the baselines on BBOB test functions.
    Evaluate,
    /// Summarize the evaluation report.
    Report,
}

fn load_config(cli: &Cli) -> aac_core::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> aac_core::Result<()> {
    let cfg = load_config(cli)?;
    aac_core::par::set_jobs(cli.jobs);
    match &cli.command {
        Command::Generate => {
            let m = pipeline::stage_generate(&cfg)?;
            println!("wrote {} functions to {}", m.entries.len(), cfg.paths().pool().display());
        }
        Command::Label => {
            let rows = pipeline::stage_label(&cfg)?;
            let accepted = rows.iter().filter(|r| r.accepted).count();
            println!("{accepted} of {} functions accepted; ledger at {}", rows.len(), cfg.paths().ledger().display());
        }
        Command::Train => {
            let model = pipeline::stage_train(&cfg)?;
            println!(
                "trained {:?} on {} features; model at {}",
                model.architecture,
                model.scaler.width(),
                cfg.paths().model().display()
            );
        }
        Command::Predict { doe } => {
            let config = pipeline::predict_from_doe(&cfg.paths().model(), doe)?;
            println!("{}", serde_json::to_string_pretty(&config)?);
        }
        Command::Evaluate => {
            let rows = pipeline::stage_evaluate(&cfg)?;
            print!("{}", pipeline::summarize(&rows));
        }
        Command::Report => {
            let path = cfg.paths().report();
            if !path.exists() {
                return Err(Error::Io {
                    path,
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "run `evaluate` first"),
                });
            }
            print!("{}", pipeline::summarize(&read_report(&path)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}

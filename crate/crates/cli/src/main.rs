use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pedant_cli::{CliError, LoadedConfig, Pipeline, StageOutcome, select_stages};

/// Runs the personality data-augmentation pipeline from a config file.
#[derive(Debug, Parser)]
#[command(name = "pedant", version)]
struct Args {
    /// ingest, finetune, generate, filter, rank, assemble, evaluate or all
    stage: String,
    #[arg(long)]
    config: PathBuf,
    /// Rerun stages even when their manifest matches the config.
    #[arg(long)]
    force: bool,
    /// Stage range such as `generate..rank`, `assemble..` or `..filter`.
    #[arg(long)]
    stages: Option<String>,
    /// Output root; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: &Args) -> Result<(), CliError> {
    let selection = select_stages(&args.stage, args.stages.as_deref())?;
    let cfg = LoadedConfig::load(&args.config)?;
    let pipeline = Pipeline::new(cfg, args.out.as_deref())?;
    eprintln!("run directory: {}", pipeline.run_dir().display());
    for (stage, outcome) in pipeline.run(&selection, args.force)? {
        match outcome {
            StageOutcome::Ran(counts) => {
                let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
                eprintln!("[{stage}] done: {}", summary.join(" "));
            }
            StageOutcome::UpToDate => eprintln!("[{stage}] up to date"),
            StageOutcome::Skipped(why) => eprintln!("[{stage}] skipped: {why}"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use sslab::cli::{run, thread_count, CliError, Experiment, ExperimentConfig};

/// Run one sslab experiment from a flat `key: value` config.
#[derive(Parser, Debug)]
#[command(name = "sslab", version)]
struct Args {
    /// spectrum, gap-sweep, meanfield, perturbation-check, hydro,
    /// correlators or timecrystal.
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` key, then
    /// `out/<experiment>`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to SSLAB_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(args: &Args) -> Result<serde_json::Value, CliError> {
    let experiment: Experiment = args.experiment.parse().map_err(|msg: String| {
        CliError::validation(vec![sslab::cli::Violation {
            field: "experiment".into(),
            message: msg,
        }])
    })?;
    if let Some(n) = thread_count(args.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::io(format!("cannot start thread pool: {e}")))?;
    }
    let config = ExperimentConfig::from_file(&args.config, Some(experiment))?;
    let dir = args
        .output
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
    let record = run(&config, args.seed)?;
    let files = record.write(&dir)?;
    Ok(json!({
        "status": "ok",
        "files": files,
        "summary": record.summary,
    }))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

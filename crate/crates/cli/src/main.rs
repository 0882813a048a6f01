// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lightcone_lab::{exit_code, run, ExperimentConfig, ExperimentKind, RunOptions, DEFAULT_MAX_POINTS};

/// Light-cone experiments for continuum fermions.
///
/// All quantities are in natural units (hbar = mass = 1). The config file is TOML
/// with flat tables: [grid], [model], [interaction], [bound], [sweep], [fock], [condexp].
#[derive(Parser, Debug)]
#[command(name = "lightcone-lab", version)]
struct Cli {
    /// onebody-scan, propagation-norm, manybody-scan, condexp-check,
    /// constants-report, clustering or volume-convergence
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; LIGHTCONE_LAB_THREADS takes precedence.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Refuse sweeps with more points than this.
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    max_points: usize,
    /// Only report configuration violations.
    #[arg(long)]
    validate: bool,
}

fn threads(jobs: Option<usize>) -> Option<usize> {
    std::env::var("LIGHTCONE_LAB_THREADS").ok().and_then(|v| v.parse().ok()).or(jobs)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let fail = |e: lightcone_core::Error| {
        eprintln!("error: {e}");
        ExitCode::from(exit_code(&e) as u8)
    };
    let kind: ExperimentKind = match cli.experiment.parse() {
        Ok(k) => k,
        Err(e) => return fail(e),
    };
    let cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if cli.validate {
        let v = cfg.validate(kind);
        for msg in &v {
            println!("{msg}");
        }
        return if v.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) };
    }
    if let Some(n) = threads(cli.jobs) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool: {e}");
        }
    }
    match run(kind, &cfg, &RunOptions { out_dir: cli.out.clone(), max_points: cli.max_points }) {
        Ok(report) => {
            for t in &report.tables {
                println!("{} ({} rows)", cli.out.join(&t.file).display(), t.rows);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

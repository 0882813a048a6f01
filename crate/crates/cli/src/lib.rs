// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Experiment harness: runs a configured sweep and writes CSV tables plus a run manifest.

pub mod config;
pub mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lightcone_core::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{ExperimentConfig, ExperimentKind};

pub const DEFAULT_MAX_POINTS: usize = 10_000;
pub const MANIFEST_NAME: &str = "manifest.json";

/// Exit status for a failed run: 1 for usage and configuration problems,
/// 2 for violated hypotheses and capacity limits, 3 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Parameter(_)
        | Error::Shape(_)
        | Error::IndexOutOfRange { .. }
        | Error::Io(_)
        | Error::Csv(_) => 1,
        Error::Resolution { .. }
        | Error::Model(_)
        | Error::Capacity(_)
        | Error::Hypothesis(_)
        | Error::Plan(_)
        | Error::Truncation(_) => 2,
        Error::Numerical(_) | Error::Divergence(_) => 3,
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub max_points: usize,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self { out_dir: out_dir.into(), max_points: DEFAULT_MAX_POINTS }
    }
}

/// One emitted table.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub body: String,
    pub rows: usize,
}

pub fn table<T: Serialize>(file: &str, rows: &[T]) -> Result<Table> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let body = String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(Table { file: file.into(), body, rows: rows.len() })
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub tables: Vec<Table>,
    pub extra_json: Vec<(String, Value)>,
    pub manifest: Value,
}

impl RunReport {
    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file == file)
    }
}

fn json_of<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn compute(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<(Vec<Table>, Vec<(String, Value)>, Value)> {
    use experiments as ex;
    Ok(match kind {
        ExperimentKind::OnebodyScan => {
            let out = ex::onebody_scan(cfg)?;
            let slopes = table("onebody_slopes.csv", &out.slopes)?;
            (vec![table("onebody_scan.csv", &out.rows)?, slopes], vec![], json!({
                "n": cfg.bound.n, "delta": cfg.bound.delta,
            }))
        }
        ExperimentKind::PropagationNorm => {
            (vec![table("propagation_norm.csv", &ex::propagation_norm(cfg)?)?], vec![], Value::Null)
        }
        ExperimentKind::ManybodyScan => {
            let out = ex::manybody_scan(cfg)?;
            (vec![table("manybody_scan.csv", &out.rows)?], vec![], json_of(&out.constants))
        }
        ExperimentKind::CondexpCheck => {
            let out = ex::condexp_check(cfg)?;
            let plans = out
                .plans
                .iter()
                .enumerate()
                .map(|(k, p)| (format!("ppt_plan_{k}.json"), json_of(p)))
                .collect();
            let failed = out.checks.iter().filter(|c| !c.pass).count();
            (
                vec![table("condexp_checks.csv", &out.checks)?, table("ppt_localization.csv", &out.localization)?],
                plans,
                json!({ "failed_checks": failed }),
            )
        }
        ExperimentKind::ConstantsReport => {
            let out = ex::constants_report(cfg)?;
            (
                vec![table("envelope_table.csv", &out.envelope)?],
                vec![("constants.json".into(), json_of(&out.reports))],
                json_of(&out.constants),
            )
        }
        ExperimentKind::Clustering => (vec![table("clustering.csv", &ex::clustering(cfg)?)?], vec![], Value::Null),
        ExperimentKind::VolumeConvergence => {
            (vec![table("volume_convergence.csv", &ex::volume_convergence_rows(cfg)?)?], vec![], Value::Null)
        }
    })
}

/// Checks the config and computes every table without touching the filesystem.
pub fn execute(kind: ExperimentKind, cfg: &ExperimentConfig, max_points: usize) -> Result<RunReport> {
    if let Some(declared) = cfg.experiment {
        if declared != kind {
            return Err(Error::Config(format!("config declares {declared}, command asks for {kind}")));
        }
    }
    cfg.potential()?;
    cfg.interaction()?;
    cfg.smearing()?;
    let violations = cfg.validate(kind);
    if !violations.is_empty() {
        return Err(Error::Hypothesis(violations.join("; ")));
    }
    let points = cfg.point_count(kind);
    if points > max_points {
        return Err(Error::Capacity(format!("{points} sweep points exceed --max-points {max_points}")));
    }
    let start = Instant::now();
    let (tables, extra_json, fitted) = compute(kind, cfg)?;
    let manifest = json!({
        "experiment": kind.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "outputs": tables.iter().map(|t| json!({"file": t.file, "rows": t.rows}))
            .chain(extra_json.iter().map(|(f, _)| json!({"file": f})))
            .collect::<Vec<_>>(),
        "fitted": fitted,
        "points": points,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    Ok(RunReport { kind, tables, extra_json, manifest })
}

pub fn write_report(report: &RunReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    for t in &report.tables {
        fs::write(out_dir.join(&t.file), &t.body)?;
    }
    for (file, v) in &report.extra_json {
        fs::write(out_dir.join(file), serde_json::to_string_pretty(v).expect("json") + "\n")?;
    }
    let manifest = serde_json::to_string_pretty(&report.manifest).expect("json") + "\n";
    fs::write(out_dir.join(MANIFEST_NAME), manifest)?;
    Ok(())
}

/// Validates, computes, and writes the artifacts into `opts.out_dir`.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let report = execute(kind, cfg, opts.max_points)?;
    write_report(&report, &opts.out_dir)?;
    Ok(report)
}

//! Campaign output files and their readers.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use crate::evolve::{CampaignResult, Island, TraceRow};
use crate::metrics::{pareto_front, pareto_points, MetricsBlock};
use crate::record::CandidateRecord;
use crate::tasks::Task;

pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const POOLS_FILE: &str = "pools.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const PARETO_FILE: &str = "pareto.csv";
pub const COVERAGE_FILE: &str = "coverage.csv";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {reason}")]
    Record { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, ReportError> {
    File::create(path).map(BufWriter::new).map_err(io(path))
}

pub fn write_records(path: &Path, records: &[CandidateRecord]) -> Result<(), ReportError> {
    let mut w = create(path)?;
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(io(path))?;
    }
    w.flush().map_err(io(path))
}

/// Reads a JSON-lines record file; blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<CandidateRecord>, ReportError> {
    let file = File::open(path).map_err(io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| ReportError::Record { path: path.to_path_buf(), line: i + 1, reason: e.to_string() })?;
        out.push(record);
    }
    Ok(out)
}

fn write_json(path: &Path, value: &Value) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    fs::write(path, text).map_err(io(path))
}

pub fn pools_json(islands: &[Island]) -> Value {
    Value::Array(
        islands
            .iter()
            .map(|i| {
                json!({
                    "island": i.id,
                    "u": i.u,
                    "success": i.success.entries(),
                    "failure": i.failure.entries(),
                })
            })
            .collect(),
    )
}

/// The metrics block as canonical JSON (sorted keys, shortest round-trip
/// floats).
pub fn summary_json(metrics: &MetricsBlock) -> String {
    let value = serde_json::to_value(metrics).expect("metrics serialize");
    let mut text = serde_json::to_string_pretty(&value).expect("json serializes");
    text.push('\n');
    text
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["iteration", "island", "tau", "mean_scores", "cumulative_hit_rate", "elite_score"])
        .map_err(csv_err)?;
    for row in trace {
        let means: Vec<String> = row.mean_scores.iter().map(f64::to_string).collect();
        w.write_record([
            row.iteration.to_string(),
            row.island.to_string(),
            row.tau.to_string(),
            means.join(";"),
            row.cumulative_hit_rate.to_string(),
            row.elite_score.map(|e| e.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io(path))
}

/// Every Pareto candidate with its front membership.
pub fn write_pareto(path: &Path, records: &[CandidateRecord], task: &Task) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let axes = task.pareto();
    let points = pareto_points(records, axes);
    let front = pareto_front(&points, axes.x.direction, axes.y.direction);
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["x", "y", "formula", "on_front"]).map_err(csv_err)?;
    for p in &points {
        let on_front = front.contains(p);
        w.write_record([p.x.to_string(), p.y.to_string(), p.formula.clone(), on_front.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io(path))
}

pub fn write_coverage(path: &Path, metrics: &MetricsBlock) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["element", "coverage"]).map_err(csv_err)?;
    for (e, c) in &metrics.element_coverage {
        w.write_record([e.clone(), c.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(io(path))
}

/// Writes the metric-derived files (summary, Pareto candidates, coverage).
pub fn write_metrics(dir: &Path, records: &[CandidateRecord], task: &Task, metrics: &MetricsBlock) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let summary = dir.join(SUMMARY_FILE);
    fs::write(&summary, summary_json(metrics)).map_err(io(&summary))?;
    write_pareto(&dir.join(PARETO_FILE), records, task)?;
    write_coverage(&dir.join(COVERAGE_FILE), metrics)
}

/// Writes every campaign output file into `dir`, creating it if needed.
pub fn write_campaign(dir: &Path, task: &Task, result: &CampaignResult) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    write_records(&dir.join(CANDIDATES_FILE), &result.records)?;
    write_json(&dir.join(POOLS_FILE), &pools_json(&result.islands))?;
    write_trace(&dir.join(TRACE_FILE), &result.trace)?;
    write_metrics(dir, &result.records, task, &result.metrics)
}

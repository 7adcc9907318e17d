//! Result files: a JSON summary per experiment, a per-epoch trace for PTA on
//! MC, and a comparison table that accumulates one row per experiment.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::ExperimentResult;

pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub summary: PathBuf,
    pub trace: Option<PathBuf>,
    pub comparison: PathBuf,
}

/// File stem shared by the summary and trace of one experiment.
pub fn stem(result: &ExperimentResult) -> String {
    format!(
        "{}-{}-n{}-w{}",
        result.task,
        result.model,
        result.config.reservoir.n_units,
        result.config.reservoir.input_scaling
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub task: String,
    pub model: String,
    pub units: usize,
    pub input_scaling: f64,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub repetitions: usize,
    pub search_budget: Option<usize>,
    pub complete: bool,
    pub wall_clock_seconds: f64,
}

impl ComparisonRow {
    pub fn from_result(r: &ExperimentResult) -> Self {
        Self {
            task: r.task.to_string(),
            model: r.model.to_string(),
            units: r.config.reservoir.n_units,
            input_scaling: r.config.reservoir.input_scaling,
            metric: r.metric.clone(),
            mean: r.mean,
            std: r.std,
            repetitions: r.runs.len(),
            search_budget: r.search_budget,
            complete: r.complete,
            wall_clock_seconds: r.wall_clock_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceRow {
    repetition: usize,
    epoch: usize,
    mean_lambda: f64,
    test_mc: Option<f64>,
}

fn format_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.into(),
        message: e.to_string(),
    }
}

/// Writes the summary, the trace (only when some run recorded one) and
/// appends to the comparison table inside `dir`.
pub fn emit_outputs(result: &ExperimentResult, dir: &Path) -> Result<EmittedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = stem(result);

    let summary = dir.join(format!("{stem}-summary.json"));
    let text = serde_json::to_string_pretty(result).map_err(|e| format_error(&summary, e))?;
    fs::write(&summary, text).map_err(|e| Error::io(&summary, e))?;

    let trace = if result.has_trace() {
        let path = dir.join(format!("{stem}-trace.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| format_error(&path, e))?;
        for (rep, run) in result.runs.iter().enumerate() {
            for rec in &run.trace {
                w.serialize(TraceRow {
                    repetition: rep,
                    epoch: rec.epoch,
                    mean_lambda: rec.mean_lambda,
                    test_mc: rec.test_mc,
                })
                .map_err(|e| format_error(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Some(path)
    } else {
        None
    };

    let comparison = dir.join(COMPARISON_FILE);
    let fresh = !comparison.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&comparison)
        .map_err(|e| Error::io(&comparison, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    w.serialize(ComparisonRow::from_result(result))
        .map_err(|e| format_error(&comparison, e))?;
    w.flush().map_err(|e| Error::io(&comparison, e))?;

    Ok(EmittedFiles {
        summary,
        trace,
        comparison,
    })
}

pub fn read_summary(path: &Path) -> Result<ExperimentResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| format_error(path, e))
}

pub fn read_comparison(path: &Path) -> Result<Vec<ComparisonRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format_error(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| format_error(path, e)))
        .collect()
}

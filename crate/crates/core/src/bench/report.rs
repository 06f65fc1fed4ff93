use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::runner::{TaskReport, TaskTimings};
use super::sweep::{SweepAxis, SweepReport};
use super::BenchError;
use crate::knowledge::TaskKind;
use crate::metrics::METRIC_COLUMNS;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const TIMINGS_JSON: &str = "timings.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TableText,
    MachineReadable,
}

/// A report that can be written in both formats.
pub trait Report: Serialize + DeserializeOwned {
    fn render_text(&self) -> String;
}

/// Left-aligned columns separated by one space, trailing spaces trimmed.
fn layout(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(s, &w)| format!("{s:<w$}")).collect();
        out.push_str(line.join(" ").trim_end());
        out.push('\n');
    }
    out
}

fn metric_header(label: Option<&str>) -> Vec<String> {
    label
        .into_iter()
        .chain(METRIC_COLUMNS)
        .map(str::to_string)
        .collect()
}

fn n_banner(n: usize) -> String {
    if n == 0 {
        "n=0 (no examples evaluated; all metrics are 0)".into()
    } else {
        format!("n={n}")
    }
}

impl Report for TaskReport {
    fn render_text(&self) -> String {
        let mut out = format!("task: {}\n{}", self.task.as_str(), n_banner(self.n_examples));
        if self.n_failed > 0 {
            out.push_str(&format!(" failed={}", self.n_failed));
        }
        out.push('\n');
        out.push_str(&format!(
            "top_k={} alpha={} tau={} knowledge_base={}\n",
            self.config.top_k,
            self.config.alpha,
            self.config.tau,
            serde_json::to_value(self.knowledge_base)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default()
        ));
        let values: Vec<String> = self.metrics.values().iter().map(|v| format!("{v:.3}")).collect();
        out.push_str(&layout(&[metric_header(None), values]));
        if let Some(acc) = &self.accuracy {
            out.push_str(&format!("accuracy: {:.3}\n", acc.overall));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

impl Report for SweepReport {
    fn render_text(&self) -> String {
        let (label, fixed) = match self.axis {
            SweepAxis::TopK => ("Top-k", format!("alpha={}", self.grid.alpha[0])),
            SweepAxis::Alpha => ("α", format!("k={}", self.grid.top_k[0])),
            SweepAxis::Both => ("k,α", String::new()),
        };
        let mut out = format!("sweep: {} {}", self.task.as_str(), fixed);
        out = out.trim_end().to_string();
        out.push('\n');
        let values: Vec<[f64; 7]> = self.cells.iter().map(|c| c.report.metrics.values()).collect();
        let best: Vec<f64> = (0..7)
            .map(|m| values.iter().map(|v| v[m]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let mut rows = vec![metric_header(Some(label))];
        for (cell, v) in self.cells.iter().zip(&values) {
            let mut row = vec![self.row_label(cell)];
            for m in 0..7 {
                let mark = if v[m] == best[m] { "*" } else { "" };
                row.push(format!("{:.3}{mark}", v[m]));
            }
            rows.push(row);
        }
        out.push_str(&layout(&rows));
        if self.cells.iter().all(|c| c.report.n_examples == 0) {
            out.push_str(&n_banner(0));
            out.push('\n');
        }
        out
    }
}

pub fn to_json<R: Report>(report: &R) -> Result<String, BenchError> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn from_json<R: Report>(text: &str) -> Result<R, BenchError> {
    Ok(serde_json::from_str(text)?)
}

/// Writes `report.json` or `report.txt` into `dir`; returns the path.
pub fn emit_report<R: Report>(report: &R, dir: impl AsRef<Path>, format: ReportFormat) -> Result<PathBuf, BenchError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let (name, body) = match format {
        ReportFormat::MachineReadable => (REPORT_JSON, to_json(report)?),
        ReportFormat::TableText => (REPORT_TEXT, report.render_text()),
    };
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

pub fn read_report<R: Report>(path: impl AsRef<Path>) -> Result<R, BenchError> {
    from_json(&fs::read_to_string(path)?)
}

pub fn write_timings(dir: impl AsRef<Path>, timings: &[TaskTimings]) -> Result<PathBuf, BenchError> {
    let path = dir.as_ref().join(TIMINGS_JSON);
    fs::create_dir_all(dir.as_ref())?;
    fs::write(&path, serde_json::to_string_pretty(timings)? + "\n")?;
    Ok(path)
}

/// `<root>/sweeps/<task>/<grid-hash>`.
pub fn sweep_dir(root: impl AsRef<Path>, task: TaskKind, grid_hash: &str) -> PathBuf {
    root.as_ref().join("sweeps").join(task.as_str()).join(grid_hash)
}

/// Writes both formats of a sweep plus timings under [`sweep_dir`].
pub fn emit_sweep(report: &SweepReport, timings: &[TaskTimings], root: impl AsRef<Path>) -> Result<PathBuf, BenchError> {
    let dir = sweep_dir(root, report.task, &report.grid_hash);
    emit_report(report, &dir, ReportFormat::MachineReadable)?;
    emit_report(report, &dir, ReportFormat::TableText)?;
    write_timings(&dir, timings)?;
    Ok(dir)
}

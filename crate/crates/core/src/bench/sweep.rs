use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::runner::{run_task, TaskReport, TaskTimings};
use super::{BenchError, Pipeline, PipelineConfig};
use crate::knowledge::{Dataset, TaskKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub top_k: Vec<usize>,
    pub alpha: Vec<f64>,
}

/// Which axis varies; decides the row labels of the summary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    TopK,
    Alpha,
    Both,
}

impl SweepGrid {
    /// Rows k=1, 3, 5 at a fixed alpha.
    pub fn top_k_grid(alpha: f64) -> Self {
        SweepGrid {
            top_k: vec![1, 3, 5],
            alpha: vec![alpha],
        }
    }

    /// Rows alpha=0.3, 0.5, 0.7, 0.9 at a fixed k.
    pub fn alpha_grid(top_k: usize) -> Self {
        SweepGrid {
            top_k: vec![top_k],
            alpha: vec![0.3, 0.5, 0.7, 0.9],
        }
    }

    pub fn axis(&self) -> SweepAxis {
        match (self.top_k.len() > 1, self.alpha.len() > 1) {
            (true, false) => SweepAxis::TopK,
            (false, true) => SweepAxis::Alpha,
            (true, true) => SweepAxis::Both,
            // a single cell reads as one row of the k table
            (false, false) => SweepAxis::TopK,
        }
    }

    /// Cells in row order: k outer, alpha inner.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.top_k
            .iter()
            .flat_map(|&k| self.alpha.iter().map(move |&a| (k, a)))
            .collect()
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("grid serialises"));
        hex::encode(&digest[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub top_k: usize,
    pub alpha: f64,
    pub report: TaskReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub task: TaskKind,
    pub grid: SweepGrid,
    pub grid_hash: String,
    pub axis: SweepAxis,
    pub base_config_hash: String,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn row_label(&self, cell: &SweepCell) -> String {
        match self.axis {
            SweepAxis::TopK => format!("k={}", cell.top_k),
            SweepAxis::Alpha => format!("{}", cell.alpha),
            SweepAxis::Both => format!("k={},α={}", cell.top_k, cell.alpha),
        }
    }
}

/// Runs one independent [`run_task`] per grid cell over `base`'s providers
/// and store.
pub fn sweep(
    task: TaskKind,
    dataset: &Dataset,
    base: &Pipeline,
    grid: &SweepGrid,
) -> Result<(SweepReport, Vec<TaskTimings>), BenchError> {
    if grid.top_k.is_empty() || grid.alpha.is_empty() {
        return Err(BenchError::ConfigInvalid("sweep grid must have at least one k and one alpha".into()));
    }
    let mut cells = Vec::new();
    let mut timings = Vec::new();
    for (top_k, alpha) in grid.cells() {
        let config = PipelineConfig {
            top_k,
            alpha,
            ..base.config().clone()
        };
        let run = run_task(task, dataset, &base.with_config(config)?)?;
        timings.push(run.timings);
        cells.push(SweepCell {
            top_k,
            alpha,
            report: run.report,
        });
    }
    Ok((
        SweepReport {
            task,
            grid: grid.clone(),
            grid_hash: grid.hash(),
            axis: grid.axis(),
            base_config_hash: base.config().config_hash(),
            cells,
        },
        timings,
    ))
}

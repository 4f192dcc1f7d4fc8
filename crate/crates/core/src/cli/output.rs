//! Result files: `results.csv`, `curves.csv`, `matrix.json` and the
//! resolved `config.toml`.

use std::path::Path;

use serde::Serialize;

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::eval::{AccuracyMatrix, MetricsReport, RunMetadata};
use crate::strategies::StrategyKind;

pub const RESULTS_HEADER: &str = "strategy,task,train_acc,avg_acc,avg_forgetting";
pub const PARTIAL_SUFFIX: &str = ".partial";

/// One row per (strategy, task), floats with six decimals.
pub fn format_results_csv(reports: &[MetricsReport]) -> String {
    let mut text = format!("{RESULTS_HEADER}\n");
    for r in reports {
        for t in &r.tasks {
            text.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6}\n",
                r.strategy, t.task, t.train_acc, t.avg_acc, t.avg_forgetting
            ));
        }
    }
    text
}

fn format_curves_csv(reports: &[MetricsReport]) -> String {
    let mut text = String::from("strategy,task,epoch,test_acc\n");
    for r in reports {
        for c in &r.curves {
            text.push_str(&format!(
                "{},{},{},{:.6}\n",
                r.strategy, c.task, c.epoch, c.test_acc
            ));
        }
    }
    text
}

#[derive(Serialize)]
struct MatrixEntry<'a> {
    strategy: StrategyKind,
    task_ids: Vec<u32>,
    matrix: &'a AccuracyMatrix,
    metadata: &'a RunMetadata,
}

fn write(dir: &Path, name: &str, suffix: &str, contents: &str) -> Result<()> {
    let path = dir.join(format!("{name}{suffix}"));
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

/// Write every output file to `dir`; with `partial` each name gets the
/// `.partial` suffix.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    reports: &[MetricsReport],
    partial: bool,
) -> Result<()> {
    let suffix = if partial { PARTIAL_SUFFIX } else { "" };
    let entries: Vec<MatrixEntry<'_>> = reports
        .iter()
        .map(|r| MatrixEntry {
            strategy: r.strategy,
            task_ids: r.tasks.iter().map(|t| t.task_id).collect(),
            matrix: &r.matrix,
            metadata: &r.metadata,
        })
        .collect();
    let json = serde_json::to_string_pretty(&entries)
        .map_err(|e| Error::Internal(format!("matrix serialization: {e}")))?;
    write(dir, "results.csv", suffix, &format_results_csv(reports))?;
    write(dir, "curves.csv", suffix, &format_curves_csv(reports))?;
    write(dir, "matrix.json", suffix, &(json + "\n"))?;
    write(dir, "config.toml", suffix, &config.to_toml_string()?)
}

//! Samples, task streams and target binning.
//!
//! A stream is an ordered list of tasks (system regimes). Inputs are the ten
//! file-system monitoring features; the target is normalized I/O performance
//! in `[0, 1]`, turned into one of ten equal-width classes.

mod csv_io;
mod drift;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, read_samples, save_csv, write_samples, COLUMNS, FEATURE_COLUMNS};
pub use drift::{generate_samples, generate_stream, DriftGenConfig, ROTATION_DEGREES};

use crate::error::{Error, Result};
use crate::seed;

pub const N_FEATURES: usize = 10;
pub const N_CLASSES: usize = 10;
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.8;

/// Slack allowed outside `[0, 1]` before a target is rejected.
const TARGET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub target_raw: f64,
    pub label: usize,
    pub task_id: u32,
}

impl Sample {
    /// Builds a sample, deriving the label from the raw target.
    pub fn new(features: Vec<f64>, target_raw: f64, task_id: u32) -> Result<Self> {
        let label = bin_target(target_raw, N_CLASSES)?;
        Ok(Self {
            features,
            target_raw,
            label,
            task_id,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: u32,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Per-feature affine map applied to every sample of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    /// z-score statistics of `samples` (population standard deviation).
    pub fn fit(samples: &[Sample]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::data("cannot fit normalization on no samples"))?;
        let dim = first.features.len();
        let n = samples.len() as f64;
        let mut mean = vec![0.0; dim];
        for s in samples {
            for (m, x) in mean.iter_mut().zip(&s.features) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for s in samples {
            for ((v, x), m) in var.iter_mut().zip(&s.features).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        // constant columns pass through centered but unscaled
        let std = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, sample: &mut Sample) {
        for ((x, m), s) in sample.features.iter_mut().zip(&self.mean).zip(&self.std) {
            *x = (*x - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStream {
    pub tasks: Vec<Task>,
    /// Statistics used to normalize features, fitted on the first task's
    /// training split. `None` for streams assembled by hand.
    pub normalization: Option<Normalization>,
}

impl TaskStream {
    pub fn new(tasks: Vec<Task>) -> Result<Self> {
        let stream = Self {
            tasks,
            normalization: None,
        };
        stream.validate()?;
        Ok(stream)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::data("stream has no tasks"));
        }
        let dim = self.tasks[0].train.first().map(|s| s.features.len()).unwrap_or(0);
        for (i, task) in self.tasks.iter().enumerate() {
            if i > 0 && task.task_id <= self.tasks[i - 1].task_id {
                return Err(Error::data(format!(
                    "task ids must strictly increase ({} after {})",
                    task.task_id,
                    self.tasks[i - 1].task_id
                )));
            }
            if task.train.is_empty() || task.test.is_empty() {
                return Err(Error::data(format!(
                    "task {} needs non-empty train and test splits",
                    task.task_id
                )));
            }
            for s in task.train.iter().chain(&task.test) {
                if s.task_id != task.task_id {
                    return Err(Error::data(format!(
                        "sample with task id {} inside task {}",
                        s.task_id, task.task_id
                    )));
                }
                if s.features.len() != dim {
                    return Err(Error::data(format!(
                        "task {} mixes feature widths {} and {dim}",
                        task.task_id,
                        s.features.len()
                    )));
                }
                if s.label >= N_CLASSES || s.label != bin_target(s.target_raw, N_CLASSES)? {
                    return Err(Error::data(format!(
                        "label {} inconsistent with target {}",
                        s.label, s.target_raw
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.tasks[0].train[0].features.len()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Keep only the first `n` tasks.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            tasks: self.tasks.iter().take(n).cloned().collect(),
            normalization: self.normalization.clone(),
        }
    }
}

/// Equal-width class of a normalized target; `y = 1` falls in the top bin.
pub fn bin_target(y: f64, n_bins: usize) -> Result<usize> {
    if n_bins == 0 {
        return Err(Error::Config("n_bins must be positive".into()));
    }
    if !y.is_finite() || !(-TARGET_SLACK..=1.0 + TARGET_SLACK).contains(&y) {
        return Err(Error::data(format!("target {y} outside [0, 1]")));
    }
    let y = y.clamp(0.0, 1.0);
    Ok(((y * n_bins as f64).floor() as usize).min(n_bins - 1))
}

/// Seeded shuffle, then a prefix/suffix split into (train, test).
pub fn split(samples: Vec<Sample>, fraction: f64, seed: u64) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} not in (0, 1)")));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::data(format!("cannot split {n} sample(s) into two parts")));
    }
    let n_train = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut samples = samples;
    let mut rng = seed::rng(seed, seed::SPLIT, &[]);
    samples.shuffle(&mut rng);
    let test = samples.split_off(n_train);
    Ok((samples, test))
}

/// Group samples by task id, split each task, and z-normalize every feature
/// with statistics from the first task's training split.
pub fn build_stream(samples: Vec<Sample>, split_fraction: f64, seed: u64) -> Result<TaskStream> {
    let mut groups: std::collections::BTreeMap<u32, Vec<Sample>> = Default::default();
    for s in samples {
        groups.entry(s.task_id).or_default().push(s);
    }
    if groups.is_empty() {
        return Err(Error::data("no samples"));
    }
    let mut tasks = Vec::with_capacity(groups.len());
    for (task_id, group) in groups {
        let (train, test) = split(
            group,
            split_fraction,
            seed::derive(seed, seed::SPLIT, &[u64::from(task_id)]),
        )
        .map_err(|e| match e {
            Error::Data { message, .. } => Error::data(format!("task {task_id}: {message}")),
            other => other,
        })?;
        tasks.push(Task { task_id, train, test });
    }

    let norm = Normalization::fit(&tasks[0].train)?;
    for task in &mut tasks {
        for s in task.train.iter_mut().chain(task.test.iter_mut()) {
            norm.apply(s);
        }
    }
    let stream = TaskStream {
        tasks,
        normalization: Some(norm),
    };
    stream.validate()?;
    Ok(stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_edges() {
        assert_eq!(bin_target(0.0, 10).unwrap(), 0);
        assert_eq!(bin_target(1.0, 10).unwrap(), 9);
        assert_eq!(bin_target(0.1, 10).unwrap(), 1);
        assert_eq!(bin_target(0.55, 10).unwrap(), 5);
        assert_eq!(bin_target(0.0999999, 10).unwrap(), 0);
        assert_eq!(bin_target(1.0 + 5e-10, 10).unwrap(), 9);
        assert_eq!(bin_target(-5e-10, 10).unwrap(), 0);
    }

    #[test]
    fn bin_rejects_out_of_range() {
        assert!(bin_target(1.2, 10).is_err());
        assert!(bin_target(-0.01, 10).is_err());
        assert!(bin_target(f64::NAN, 10).is_err());
    }

    fn samples(n: usize, task_id: u32) -> Vec<Sample> {
        (0..n)
            .map(|i| Sample::new(vec![i as f64; N_FEATURES], (i % 10) as f64 / 10.0, task_id).unwrap())
            .collect()
    }

    #[test]
    fn split_counts_and_conservation() {
        let input = samples(10, 0);
        let (train, test) = split(input.clone(), 0.8, 3).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let mut all: Vec<_> = train.iter().chain(&test).map(|s| s.features[0] as i64).collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        let (train2, _) = split(input, 0.8, 3).unwrap();
        assert_eq!(train, train2);
    }

    #[test]
    fn split_degenerate_inputs() {
        assert!(split(samples(1, 0), 0.8, 0).is_err());
        assert!(split(samples(10, 0), 1.0, 0).is_err());
        assert!(split(samples(10, 0), 0.0, 0).is_err());
        let (train, test) = split(samples(2, 0), 0.99, 0).unwrap();
        assert_eq!((train.len(), test.len()), (1, 1));
    }

    #[test]
    fn build_stream_groups_and_normalizes_on_first_task() {
        let mut all = samples(100, 2);
        all.extend(samples(100, 0));
        all.extend(samples(100, 1));
        let stream = build_stream(all, 0.8, 11).unwrap();
        let ids: Vec<_> = stream.tasks.iter().map(|t| t.task_id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        for t in &stream.tasks {
            assert_eq!((t.train.len(), t.test.len()), (80, 20));
        }
        let first = &stream.tasks[0].train;
        let mean: f64 = first.iter().map(|s| s.features[0]).sum::<f64>() / first.len() as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn stream_rejects_decreasing_ids() {
        let t = |id| Task {
            task_id: id,
            train: samples(2, id),
            test: samples(1, id),
        };
        assert!(TaskStream::new(vec![t(1), t(0)]).is_err());
        assert!(TaskStream::new(vec![t(0), t(1)]).is_ok());
    }
}

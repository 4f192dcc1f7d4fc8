use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{avg_accuracy, avg_forgetting, AccuracyMatrix};
use crate::data::{Sample, TaskStream};
use crate::error::{Error, Result};
use crate::nn::{AdamState, LossTerm, Mlp, ModelConfig, TermContext};
use crate::seed;
use crate::strategies::{Strategy, StrategyKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub test_batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 4,
            test_batch_size: 4,
            learning_rate: 0.001,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.test_batch_size == 0 {
            return Err(Error::Config("epochs and batch sizes must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be finite and > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    /// 1-based position in the stream.
    pub task: usize,
    pub task_id: u32,
    pub train_acc: f64,
    pub avg_acc: f64,
    pub avg_forgetting: f64,
}

/// Current-task test accuracy of the live model after one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub task: usize,
    pub epoch: usize,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config_digest: Option<String>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: StrategyKind,
    pub tasks: Vec<TaskMetrics>,
    pub matrix: AccuracyMatrix,
    pub curves: Vec<CurvePoint>,
    pub metadata: RunMetadata,
}

impl MetricsReport {
    pub fn final_metrics(&self) -> Option<&TaskMetrics> {
        self.tasks.last()
    }
}

/// Fraction of samples whose predicted class matches the label.
pub fn evaluate(model: &Mlp, samples: &[Sample], batch_size: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Eval("cannot evaluate on an empty set".into()));
    }
    let mut correct = 0usize;
    for chunk in samples.chunks(batch_size.max(1)) {
        let inputs: Vec<&[f64]> = chunk.iter().map(|s| s.features.as_slice()).collect();
        let predicted = model.predict(&inputs)?;
        correct += predicted
            .iter()
            .zip(chunk)
            .filter(|(p, s)| **p == s.label)
            .count();
    }
    Ok(correct as f64 / samples.len() as f64)
}

fn epoch_order(n: usize, seed: u64, path: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed, seed::SHUFFLE, path));
    order
}

/// Plain cross-entropy training with a fresh Adam state.
pub fn fit(model: &mut Mlp, data: &[Sample], config: &TrainConfig, seed: u64) -> Result<()> {
    config.validate()?;
    let mut adam = AdamState::new(model.param_count(), config.learning_rate);
    for epoch in 0..config.epochs {
        let order = epoch_order(data.len(), seed, &[epoch as u64]);
        for idx in order.chunks(config.batch_size) {
            let inputs: Vec<&[f64]> = idx.iter().map(|&i| data[i].features.as_slice()).collect();
            let labels: Vec<usize> = idx.iter().map(|&i| data[i].label).collect();
            let (_, grad) = model.data_gradient(&inputs, &labels)?;
            adam.step(model, &grad)?;
        }
    }
    Ok(())
}

struct StrategyTerm<'s>(&'s mut dyn Strategy);

impl LossTerm for StrategyTerm<'_> {
    fn accumulate(&mut self, ctx: &mut TermContext<'_>) -> Result<f64> {
        self.0.augment_loss(ctx)
    }
}

/// Train `strategy` over every task of `stream` in order and collect the
/// accuracy matrix and per-task metrics.
///
/// The model is initialized from `model_config` (including its seed).
/// Batch order for task `t`, epoch `e` is drawn from `seed` alone, so every
/// strategy sees the same batches. Adam state is reset at each task start.
pub fn run_strategy(
    stream: &TaskStream,
    strategy: &mut dyn Strategy,
    model_config: &ModelConfig,
    train: &TrainConfig,
    seed: u64,
) -> Result<MetricsReport> {
    train.validate()?;
    stream.validate()?;
    if stream.input_dim() != model_config.input_dim {
        return Err(Error::Config(format!(
            "model expects {} features, stream has {}",
            model_config.input_dim,
            stream.input_dim()
        )));
    }
    let started = Instant::now();
    let kind = strategy.kind();
    let ctx = |task: usize, epoch: usize, batch: usize| {
        move |e: Error| Error::Run {
            strategy: kind.to_string(),
            task,
            epoch,
            batch,
            source: Box::new(e),
        }
    };

    let mut model = Mlp::new(model_config)?;
    let mut matrix = AccuracyMatrix::new();
    let mut tasks = Vec::with_capacity(stream.len());
    let mut curves = Vec::new();

    for (t, task) in stream.tasks.iter().enumerate() {
        let tn = t + 1;
        strategy.before_task(&model, task).map_err(ctx(tn, 0, 0))?;
        let mut adam = AdamState::new(model.param_count(), train.learning_rate);

        for epoch in 0..train.epochs {
            let order = epoch_order(task.train.len(), seed, &[t as u64, epoch as u64]);
            for (b, idx) in order.chunks(train.batch_size).enumerate() {
                let wrap = ctx(tn, epoch + 1, b + 1);
                let batch: Vec<&Sample> = idx.iter().map(|&i| &task.train[i]).collect();
                let inputs: Vec<&[f64]> = batch.iter().map(|s| s.features.as_slice()).collect();
                let labels: Vec<usize> = batch.iter().map(|s| s.label).collect();

                let out = {
                    let mut term = StrategyTerm(&mut *strategy);
                    model.backward(&inputs, &labels, &mut [&mut term]).map_err(wrap)?
                };
                let grad = strategy.modify_gradient(out.grad, &model).map_err(wrap)?;
                let delta = adam.step(&mut model, &grad).map_err(wrap)?;
                strategy.on_step(&out.data_grad, &delta).map_err(wrap)?;
                strategy.on_batch(&batch, &model).map_err(wrap)?;
            }
            let test_acc =
                evaluate(&model, &task.test, train.test_batch_size).map_err(ctx(tn, epoch + 1, 0))?;
            curves.push(CurvePoint {
                task: tn,
                epoch: epoch + 1,
                test_acc,
            });
        }

        strategy.after_task(&model, task).map_err(ctx(tn, 0, 0))?;
        let eval_model = strategy.eval_model(&model).map_err(ctx(tn, 0, 0))?;
        let scorer = eval_model.as_ref().unwrap_or(&model);

        let row = stream.tasks[..=t]
            .iter()
            .map(|seen| evaluate(scorer, &seen.test, train.test_batch_size))
            .collect::<Result<Vec<_>>>()
            .map_err(ctx(tn, 0, 0))?;
        matrix.push_row(row)?;
        let train_acc = evaluate(scorer, &task.train, train.test_batch_size).map_err(ctx(tn, 0, 0))?;
        tasks.push(TaskMetrics {
            task: tn,
            task_id: task.task_id,
            train_acc,
            avg_acc: avg_accuracy(&matrix, tn)?,
            avg_forgetting: avg_forgetting(&matrix, tn)?,
        });
    }

    Ok(MetricsReport {
        strategy: kind,
        tasks,
        matrix,
        curves,
        metadata: RunMetadata {
            seed,
            config_digest: None,
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
    })
}

//! Synthetic real-concept-drift stream.
//!
//! Every task draws inputs from the same standard normal distribution. Only
//! the mapping to the target changes: task `t` uses
//! `clamp01(logistic(w_t · x + b_t) + noise)`, where `w_{t+1}` is `w_t`
//! rotated by 120° inside a fixed random plane through `w_0` and `b_t` is an
//! optional per-task offset (zero unless configured).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{build_stream, Sample, TaskStream, DEFAULT_SPLIT_FRACTION};
use crate::error::{Error, Result};
use crate::seed;

pub const ROTATION_DEGREES: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftGenConfig {
    pub n_tasks: usize,
    pub samples_per_task: usize,
    pub input_dim: usize,
    /// Norm of each task's weight vector.
    pub drift_strength: f64,
    pub noise_sd: f64,
    /// Offset `b_t` for task `t`; missing entries are zero.
    pub task_offsets: Vec<f64>,
    /// Not part of config files: experiments derive it from their master seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for DriftGenConfig {
    fn default() -> Self {
        Self {
            n_tasks: 3,
            samples_per_task: 1000,
            input_dim: super::N_FEATURES,
            drift_strength: 4.0,
            noise_sd: 0.05,
            task_offsets: Vec::new(),
            seed: 0,
        }
    }
}

impl DriftGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tasks < 2 {
            return Err(Error::Config(format!(
                "n_tasks = {}: drift needs at least two tasks",
                self.n_tasks
            )));
        }
        if self.samples_per_task < 50 {
            return Err(Error::Config(format!(
                "samples_per_task = {} (minimum 50)",
                self.samples_per_task
            )));
        }
        if self.input_dim < 2 {
            return Err(Error::Config("input_dim must be at least 2".into()));
        }
        if !(self.drift_strength.is_finite() && self.drift_strength > 0.0) {
            return Err(Error::Config("drift_strength must be finite and > 0".into()));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::Config("noise_sd must be finite and >= 0".into()));
        }
        if self.task_offsets.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("task_offsets must be finite".into()));
        }
        Ok(())
    }

    pub fn offset(&self, task: usize) -> f64 {
        self.task_offsets.get(task).copied().unwrap_or(0.0)
    }
}

fn normal_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Weight vectors for every task.
pub(crate) fn task_weights<R: Rng>(config: &DriftGenConfig, rng: &mut R) -> Vec<Vec<f64>> {
    let dim = config.input_dim;
    let mut w = normal_vec(rng, dim);
    normalize(&mut w);
    w.iter_mut().for_each(|x| *x *= config.drift_strength);

    // the rotation plane contains w0, so consecutive tasks are 120° apart
    let mut a = w.clone();
    normalize(&mut a);
    let mut b = normal_vec(rng, dim);
    let proj = dot(&a, &b);
    b.iter_mut().zip(&a).for_each(|(bi, ai)| *bi -= proj * ai);
    normalize(&mut b);

    let (sin, cos) = ROTATION_DEGREES.to_radians().sin_cos();
    let mut weights = Vec::with_capacity(config.n_tasks);
    weights.push(w);
    for _ in 1..config.n_tasks {
        let prev = weights.last().unwrap();
        let (pa, pb) = (dot(prev, &a), dot(prev, &b));
        let (ra, rb) = (cos * pa - sin * pb, sin * pa + cos * pb);
        let next = prev
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(p, (ai, bi))| p + (ra - pa) * ai + (rb - pb) * bi)
            .collect();
        weights.push(next);
    }
    weights
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Raw (unnormalized, unsplit) samples for every task, in task order.
pub fn generate_samples(config: &DriftGenConfig) -> Result<Vec<Sample>> {
    config.validate()?;
    let mut rng = seed::rng(config.seed, seed::GENERATOR, &[]);
    let weights = task_weights(config, &mut rng);
    let mut out = Vec::with_capacity(config.n_tasks * config.samples_per_task);
    for (t, w) in weights.iter().enumerate() {
        let offset = config.offset(t);
        for _ in 0..config.samples_per_task {
            let x = normal_vec(&mut rng, config.input_dim);
            let eps: f64 = rng.sample::<f64, _>(StandardNormal) * config.noise_sd;
            let y = (logistic(dot(w, &x) + offset) + eps).clamp(0.0, 1.0);
            out.push(Sample::new(x, y, t as u32)?);
        }
    }
    Ok(out)
}

/// Generated stream with the default 80/20 split, seeded from the config.
pub fn generate_stream(config: &DriftGenConfig) -> Result<TaskStream> {
    build_stream(generate_samples(config)?, DEFAULT_SPLIT_FRACTION, config.seed)
}

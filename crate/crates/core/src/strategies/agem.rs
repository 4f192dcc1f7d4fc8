//! Averaged GEM: project the update when it would increase the loss on a
//! reference batch drawn from episodic memory.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_len, Strategy, StrategyKind};
use crate::data::{Sample, Task};
use crate::error::Result;
use crate::nn::{dot, Mlp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgemConfig {
    pub patterns_per_exp: usize,
    pub ref_batch_size: usize,
}

impl Default for AgemConfig {
    fn default() -> Self {
        Self {
            patterns_per_exp: 2,
            ref_batch_size: 16,
        }
    }
}

/// Returns `g` if it agrees with `g_ref`, otherwise `g` with its component
/// along `g_ref` removed. A zero reference leaves `g` untouched.
pub fn agem_project(g: &[f64], g_ref: &[f64]) -> Result<Vec<f64>> {
    check_len("agem projection", g.len(), g_ref.len())?;
    let dot_g = dot(g, g_ref);
    let dot_ref = dot(g_ref, g_ref);
    if dot_g >= 0.0 || dot_ref == 0.0 {
        return Ok(g.to_vec());
    }
    let scale = dot_g / dot_ref;
    Ok(g.iter().zip(g_ref).map(|(gi, ri)| gi - scale * ri).collect())
}

#[derive(Debug, Clone)]
pub struct Agem {
    pub config: AgemConfig,
    pub memory: Vec<Sample>,
    rng: ChaCha8Rng,
}

impl Agem {
    pub fn new(config: AgemConfig, rng: ChaCha8Rng) -> Self {
        Self {
            config,
            memory: Vec::new(),
            rng,
        }
    }

    fn reference_batch(&mut self) -> Vec<&Sample> {
        let n = self.memory.len();
        if n <= self.config.ref_batch_size {
            return self.memory.iter().collect();
        }
        index::sample(&mut self.rng, n, self.config.ref_batch_size)
            .into_iter()
            .map(|i| &self.memory[i])
            .collect()
    }
}

impl Strategy for Agem {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Agem
    }

    fn modify_gradient(&mut self, gradient: Vec<f64>, model: &Mlp) -> Result<Vec<f64>> {
        if self.memory.is_empty() {
            return Ok(gradient);
        }
        let batch = self.reference_batch();
        let inputs: Vec<&[f64]> = batch.iter().map(|s| s.features.as_slice()).collect();
        let labels: Vec<usize> = batch.iter().map(|s| s.label).collect();
        let (_, g_ref) = model.data_gradient(&inputs, &labels)?;
        agem_project(&gradient, &g_ref)
    }

    fn after_task(&mut self, _model: &Mlp, task: &Task) -> Result<()> {
        let n = task.train.len();
        let k = self.config.patterns_per_exp.min(n);
        let picked = index::sample(&mut self.rng, n, k);
        self.memory
            .extend(picked.into_iter().map(|i| task.train[i].clone()));
        Ok(())
    }
}

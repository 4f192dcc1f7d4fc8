//! GSS-Greedy: a rehearsal buffer filled by gradient diversity.
//!
//! Each candidate's gradient is compared with the gradients of a few random
//! buffer members. While the buffer has room every candidate is stored. Once
//! it is full, a candidate whose best cosine similarity falls below the
//! threshold replaces the most similar compared member; otherwise it is
//! dropped. During training a random batch from the buffer is replayed
//! alongside each current batch.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Strategy, StrategyKind};
use crate::data::Sample;
use crate::error::Result;
use crate::nn::{dot, Mlp, TermContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GssConfig {
    pub mem_size: usize,
    pub n_compare: usize,
    pub similarity_threshold: f64,
    /// Buffer samples replayed per training batch.
    pub replay_batch_size: usize,
}

impl Default for GssConfig {
    fn default() -> Self {
        Self {
            mem_size: 5000,
            n_compare: 10,
            similarity_threshold: 0.0,
            replay_batch_size: 4,
        }
    }
}

/// Cosine similarity clamped to `[-1, 1]`; zero if either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Stored samples with their redundancy score (best cosine similarity + 1).
#[derive(Debug, Clone)]
pub struct GssBuffer {
    pub config: GssConfig,
    pub entries: Vec<(Sample, f64)>,
    rng: ChaCha8Rng,
}

fn sample_gradient(model: &Mlp, s: &Sample) -> Result<Vec<f64>> {
    Ok(model.data_gradient(&[s.features.as_slice()], &[s.label])?.1)
}

impl GssBuffer {
    pub fn new(config: GssConfig, rng: ChaCha8Rng) -> Self {
        Self {
            config,
            entries: Vec::new(),
            rng,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Offer one candidate. Returns true if it was stored.
    pub fn insert(&mut self, candidate: &Sample, model: &Mlp) -> Result<bool> {
        if self.config.mem_size == 0 {
            return Ok(false);
        }
        if self.entries.is_empty() {
            self.entries.push((candidate.clone(), 0.0));
            return Ok(true);
        }

        let k = self.config.n_compare.min(self.entries.len());
        let compared = index::sample(&mut self.rng, self.entries.len(), k).into_vec();
        let g = sample_gradient(model, candidate)?;
        let mut sims = Vec::with_capacity(k);
        for &i in &compared {
            let gi = sample_gradient(model, &self.entries[i].0)?;
            sims.push(cosine_similarity(&g, &gi));
        }
        // with k = 0 there is nothing to compare against
        let (best_pos, best_sim) =
            sims.iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (j, s)| if s > acc.1 { (j, s) } else { acc },
                );
        let best_sim = if k == 0 { 0.0 } else { best_sim };

        if self.entries.len() < self.config.mem_size {
            self.raise_scores(&compared, &sims);
            self.entries.push((candidate.clone(), best_sim + 1.0));
            return Ok(true);
        }
        if k == 0 || best_sim >= self.config.similarity_threshold {
            return Ok(false);
        }
        let victim = compared[best_pos];
        self.raise_scores(&compared, &sims);
        self.entries[victim] = (candidate.clone(), best_sim + 1.0);
        Ok(true)
    }

    fn raise_scores(&mut self, compared: &[usize], sims: &[f64]) {
        for (&i, &s) in compared.iter().zip(sims) {
            let score = &mut self.entries[i].1;
            *score = score.max(s + 1.0);
        }
    }

    fn replay_batch(&mut self) -> Vec<Sample> {
        let n = self.entries.len();
        let k = self.config.replay_batch_size.min(n);
        if k == 0 {
            return Vec::new();
        }
        index::sample(&mut self.rng, n, k)
            .into_iter()
            .map(|i| self.entries[i].0.clone())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Gss {
    pub buffer: GssBuffer,
}

impl Gss {
    pub fn new(config: GssConfig, rng: ChaCha8Rng) -> Self {
        Self {
            buffer: GssBuffer::new(config, rng),
        }
    }
}

impl Strategy for Gss {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Gss
    }

    fn augment_loss(&mut self, ctx: &mut TermContext<'_>) -> Result<f64> {
        let replay = self.buffer.replay_batch();
        if replay.is_empty() {
            return Ok(0.0);
        }
        let inputs: Vec<&[f64]> = replay.iter().map(|s| s.features.as_slice()).collect();
        let labels: Vec<usize> = replay.iter().map(|s| s.label).collect();
        let (loss, grad) = ctx.model.data_gradient(&inputs, &labels)?;
        for (d, g) in ctx.d_params.iter_mut().zip(&grad) {
            *d += g;
        }
        Ok(loss)
    }

    fn on_batch(&mut self, batch: &[&Sample], model: &Mlp) -> Result<()> {
        for s in batch {
            self.buffer.insert(s, model)?;
        }
        Ok(())
    }
}

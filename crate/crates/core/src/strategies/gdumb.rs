//! GDumb: a class-balanced greedy memory, and a model trained from scratch
//! on that memory whenever an evaluation model is needed.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Strategy, StrategyKind};
use crate::data::{Sample, Task};
use crate::error::{Error, Result};
use crate::eval::{fit, TrainConfig};
use crate::nn::{Mlp, ModelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GDumbConfig {
    pub mem_size: usize,
}

impl Default for GDumbConfig {
    fn default() -> Self {
        Self { mem_size: 5000 }
    }
}

/// Per-class buckets whose total never exceeds `mem_size`.
#[derive(Debug, Clone)]
pub struct GDumbMemory {
    pub mem_size: usize,
    pub buckets: BTreeMap<usize, Vec<Sample>>,
    rng: ChaCha8Rng,
}

impl GDumbMemory {
    pub fn new(mem_size: usize, rng: ChaCha8Rng) -> Self {
        Self {
            mem_size,
            buckets: BTreeMap::new(),
            rng,
        }
    }

    pub fn len(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn size_of(&self, class: usize) -> usize {
        self.buckets.get(&class).map_or(0, Vec::len)
    }

    /// Add a sample. When full, one random sample is first evicted from a
    /// largest bucket: the sample's own bucket if it is among the largest,
    /// otherwise the largest bucket with the lowest class index.
    ///
    /// Returns the class evicted from, if any.
    pub fn insert(&mut self, sample: Sample) -> Option<usize> {
        if self.mem_size == 0 {
            return None;
        }
        let mut evicted = None;
        if self.len() >= self.mem_size {
            let max = self.buckets.values().map(Vec::len).max().unwrap_or(0);
            let source = if self.size_of(sample.label) == max {
                sample.label
            } else {
                *self
                    .buckets
                    .iter()
                    .find(|(_, b)| b.len() == max)
                    .map(|(c, _)| c)
                    .expect("a full memory has a non-empty bucket")
            };
            let bucket = self.buckets.get_mut(&source).unwrap();
            let i = self.rng.random_range(0..bucket.len());
            bucket.swap_remove(i);
            evicted = Some(source);
        }
        self.buckets.entry(sample.label).or_default().push(sample);
        evicted
    }

    /// All stored samples, by class then insertion slot.
    pub fn samples(&self) -> Vec<Sample> {
        self.buckets.values().flatten().cloned().collect()
    }
}

#[derive(Debug, Clone)]
pub struct GDumb {
    pub memory: GDumbMemory,
    model_config: ModelConfig,
    train: TrainConfig,
    eval_seed: u64,
}

impl GDumb {
    pub fn new(
        config: GDumbConfig,
        model_config: ModelConfig,
        train: TrainConfig,
        eval_seed: u64,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            memory: GDumbMemory::new(config.mem_size, rng),
            model_config,
            train,
            eval_seed,
        }
    }

    /// Fresh model trained with plain cross-entropy on the memory.
    pub fn train_from_memory(&self) -> Result<Mlp> {
        let data = self.memory.samples();
        if data.is_empty() {
            return Err(Error::Strategy("GDumb memory is empty".into()));
        }
        let config = ModelConfig {
            seed: self.eval_seed,
            ..self.model_config.clone()
        };
        let mut model = Mlp::new(&config)?;
        fit(&mut model, &data, &self.train, self.eval_seed)?;
        Ok(model)
    }
}

impl Strategy for GDumb {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Gdumb
    }

    fn before_task(&mut self, _model: &Mlp, task: &Task) -> Result<()> {
        for s in &task.train {
            self.memory.insert(s.clone());
        }
        Ok(())
    }

    fn eval_model(&mut self, _live: &Mlp) -> Result<Option<Mlp>> {
        // zero capacity disables the memory; evaluation then uses the live model
        if self.memory.mem_size == 0 {
            return Ok(None);
        }
        self.train_from_memory().map(Some)
    }
}

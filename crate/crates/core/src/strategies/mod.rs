//! Continual-learning strategies behind one lifecycle contract.
//!
//! The training loop calls, per task: `before_task`, then for every batch
//! `augment_loss` (during the backward pass), `modify_gradient`, the
//! optimizer step, `on_step` and `on_batch`; finally `after_task` and
//! `eval_model`. Every hook defaults to a no-op, which is exactly Naive
//! fine-tuning.

mod agem;
mod ewc;
mod gdumb;
mod gss;
mod lwf;
mod si;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use agem::{agem_project, Agem, AgemConfig};
pub use ewc::{compute_fisher_diag, ewc_penalty, ewc_penalty_grad, Ewc, EwcAnchor, EwcConfig, EwcMode};
pub use gdumb::{GDumb, GDumbConfig, GDumbMemory};
pub use gss::{cosine_similarity, Gss, GssBuffer, GssConfig};
pub use lwf::{lwf_loss, Lwf, LwfConfig};
pub use si::{Si, SiConfig, SiState};

use crate::data::{Sample, Task};
use crate::error::{Error, Result};
use crate::eval::TrainConfig;
use crate::nn::{Mlp, ModelConfig, TermContext};
use crate::seed;

pub trait Strategy: Send {
    fn kind(&self) -> StrategyKind;

    fn before_task(&mut self, _model: &Mlp, _task: &Task) -> Result<()> {
        Ok(())
    }

    /// Add this strategy's extra loss for the current batch; returns its value.
    fn augment_loss(&mut self, _ctx: &mut TermContext<'_>) -> Result<f64> {
        Ok(0.0)
    }

    fn modify_gradient(&mut self, gradient: Vec<f64>, _model: &Mlp) -> Result<Vec<f64>> {
        Ok(gradient)
    }

    /// Called after each optimizer step with the data-loss gradient (no
    /// penalty terms) and the realized parameter change.
    fn on_step(&mut self, _data_grad: &[f64], _param_delta: &[f64]) -> Result<()> {
        Ok(())
    }

    fn on_batch(&mut self, _batch: &[&Sample], _model: &Mlp) -> Result<()> {
        Ok(())
    }

    fn after_task(&mut self, _model: &Mlp, _task: &Task) -> Result<()> {
        Ok(())
    }

    /// Model used for evaluation after a task. `None` means the live model.
    fn eval_model(&mut self, _live: &Mlp) -> Result<Option<Mlp>> {
        Ok(None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Naive,
    Ewc,
    Si,
    Lwf,
    Agem,
    Gss,
    Gdumb,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Naive,
        StrategyKind::Ewc,
        StrategyKind::Si,
        StrategyKind::Lwf,
        StrategyKind::Agem,
        StrategyKind::Gss,
        StrategyKind::Gdumb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Naive => "naive",
            StrategyKind::Ewc => "ewc",
            StrategyKind::Si => "si",
            StrategyKind::Lwf => "lwf",
            StrategyKind::Agem => "agem",
            StrategyKind::Gss => "gss",
            StrategyKind::Gdumb => "gdumb",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|k| *k == self).unwrap() as u64
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown strategy `{s}` (expected one of naive, ewc, si, lwf, agem, gss, gdumb)"
            ))
        })
    }
}

/// Comma-separated strategy names, e.g. `naive,ewc,gdumb`. Duplicates are
/// rejected; order is kept.
pub fn parse_strategy_list(text: &str) -> Result<Vec<StrategyKind>> {
    let mut out = Vec::new();
    for name in text.split(',').map(str::trim) {
        if name.is_empty() {
            continue;
        }
        let kind: StrategyKind = name.parse()?;
        if out.contains(&kind) {
            return Err(Error::Config(format!("strategy `{name}` listed twice")));
        }
        out.push(kind);
    }
    if out.is_empty() {
        return Err(Error::Config("no strategies named".into()));
    }
    Ok(out)
}

/// Hyperparameters for every strategy; only the selected one is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    pub ewc: EwcConfig,
    pub si: SiConfig,
    pub lwf: LwfConfig,
    pub agem: AgemConfig,
    pub gss: GssConfig,
    pub gdumb: GDumbConfig,
}

impl StrategyParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite and >= 0")))
            }
        };
        nonneg("ewc.lambda", self.ewc.lambda)?;
        nonneg("si.lambda", self.si.lambda)?;
        nonneg("lwf.alpha", self.lwf.alpha)?;
        if !(self.si.eps.is_finite() && self.si.eps > 0.0) {
            return Err(Error::Config("si.eps must be finite and > 0".into()));
        }
        if !(self.lwf.temperature.is_finite() && self.lwf.temperature > 0.0) {
            return Err(Error::Config("lwf.temperature must be finite and > 0".into()));
        }
        if self.agem.ref_batch_size == 0 {
            return Err(Error::Config("agem.ref_batch_size must be positive".into()));
        }
        if !self.gss.similarity_threshold.is_finite() {
            return Err(Error::Config("gss.similarity_threshold must be finite".into()));
        }
        Ok(())
    }
}

/// What a strategy needs to know about the run it belongs to.
#[derive(Debug, Clone)]
pub struct BuildContext {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Master seed of the run.
    pub seed: u64,
}

pub fn build(kind: StrategyKind, params: &StrategyParams, ctx: &BuildContext) -> Result<Box<dyn Strategy>> {
    params.validate()?;
    let rng = seed::rng(ctx.seed, seed::STRATEGY, &[kind.index()]);
    Ok(match kind {
        StrategyKind::Naive => Box::new(Naive),
        StrategyKind::Ewc => Box::new(Ewc::new(params.ewc.clone())),
        StrategyKind::Si => Box::new(Si::new(params.si.clone())),
        StrategyKind::Lwf => Box::new(Lwf::new(params.lwf.clone())),
        StrategyKind::Agem => Box::new(Agem::new(params.agem.clone(), rng)),
        StrategyKind::Gss => Box::new(Gss::new(params.gss.clone(), rng)),
        StrategyKind::Gdumb => {
            let eval_seed = seed::derive(ctx.seed, seed::EVAL_MODEL, &[]);
            Box::new(GDumb::new(
                params.gdumb.clone(),
                ctx.model.clone(),
                ctx.train.clone(),
                eval_seed,
                rng,
            ))
        }
    })
}

/// Plain incremental fine-tuning.
#[derive(Debug, Default, Clone)]
pub struct Naive;

impl Strategy for Naive {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Naive
    }
}

fn check_len(what: &str, a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Internal(format!("{what}: length {a} vs {b}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.as_str().parse::<StrategyKind>().unwrap(), k);
        }
        assert!("icarl".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn strategy_lists() {
        assert_eq!(
            parse_strategy_list("naive, gdumb").unwrap(),
            vec![StrategyKind::Naive, StrategyKind::Gdumb]
        );
        assert!(parse_strategy_list("").is_err());
        assert!(parse_strategy_list("naive,naive").is_err());
        assert!(parse_strategy_list("naive,foo").is_err());
    }

    #[test]
    fn negative_strength_rejected() {
        let mut p = StrategyParams::default();
        p.ewc.lambda = -1.0;
        assert!(p.validate().is_err());
    }
}

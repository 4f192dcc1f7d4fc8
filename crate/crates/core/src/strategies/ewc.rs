//! Elastic Weight Consolidation, "separate" mode: one quadratic anchor per
//! finished task, weighted by that task's diagonal Fisher.

use serde::{Deserialize, Serialize};

use super::{check_len, Strategy, StrategyKind};
use crate::data::{Sample, Task};
use crate::error::{Error, Result};
use crate::nn::{Mlp, TermContext};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EwcMode {
    #[default]
    Separate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EwcConfig {
    pub lambda: f64,
    pub mode: EwcMode,
}

impl Default for EwcConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            mode: EwcMode::Separate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EwcAnchor {
    pub params: Vec<f64>,
    pub fisher: Vec<f64>,
}

/// `Σ_k (λ/2) Σ_i F_k,i (θ_i − θ*_k,i)²`; zero with no anchors.
pub fn ewc_penalty(anchors: &[EwcAnchor], lambda: f64, params: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for a in anchors {
        check_len("ewc anchor", a.params.len(), params.len())?;
        check_len("ewc fisher", a.fisher.len(), params.len())?;
        let sum: f64 = params
            .iter()
            .zip(&a.params)
            .zip(&a.fisher)
            .map(|((p, s), f)| f * (p - s) * (p - s))
            .sum();
        total += 0.5 * lambda * sum;
    }
    Ok(total)
}

/// Add `λ F_k ⊙ (θ − θ*_k)` for every anchor into `grad`.
pub fn ewc_penalty_grad(anchors: &[EwcAnchor], lambda: f64, params: &[f64], grad: &mut [f64]) {
    for a in anchors {
        for (((g, p), s), f) in grad.iter_mut().zip(params).zip(&a.params).zip(&a.fisher) {
            *g += lambda * f * (p - s);
        }
    }
}

/// Empirical Fisher diagonal: mean squared per-sample gradient of the
/// negative log-likelihood at the true label.
pub fn compute_fisher_diag(model: &Mlp, data: &[Sample]) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Strategy(
            "Fisher estimate needs at least one sample".into(),
        ));
    }
    let mut fisher = vec![0.0; model.param_count()];
    for s in data {
        let (_, g) = model.data_gradient(&[s.features.as_slice()], &[s.label])?;
        for (f, gi) in fisher.iter_mut().zip(&g) {
            *f += gi * gi;
        }
    }
    let n = data.len() as f64;
    fisher.iter_mut().for_each(|f| *f /= n);
    Ok(fisher)
}

#[derive(Debug, Clone)]
pub struct Ewc {
    pub config: EwcConfig,
    pub anchors: Vec<EwcAnchor>,
}

impl Ewc {
    pub fn new(config: EwcConfig) -> Self {
        Self {
            config,
            anchors: Vec::new(),
        }
    }
}

impl Strategy for Ewc {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Ewc
    }

    fn augment_loss(&mut self, ctx: &mut TermContext<'_>) -> Result<f64> {
        if self.anchors.is_empty() {
            return Ok(0.0);
        }
        let params = ctx.model.params();
        let value = ewc_penalty(&self.anchors, self.config.lambda, params)?;
        ewc_penalty_grad(&self.anchors, self.config.lambda, params, ctx.d_params);
        Ok(value)
    }

    fn after_task(&mut self, model: &Mlp, task: &Task) -> Result<()> {
        let fisher = compute_fisher_diag(model, &task.train)?;
        self.anchors.push(EwcAnchor {
            params: model.params().to_vec(),
            fisher,
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelConfig;

    fn anchor(p: Vec<f64>, f: Vec<f64>) -> EwcAnchor {
        EwcAnchor { params: p, fisher: f }
    }

    #[test]
    fn zero_at_anchor_and_hand_value() {
        let a = anchor(vec![1.0], vec![2.0]);
        assert_eq!(ewc_penalty(std::slice::from_ref(&a), 0.5, &[1.0]).unwrap(), 0.0);
        // (0.5 / 2) * 2 * (3 - 1)^2
        assert_eq!(ewc_penalty(std::slice::from_ref(&a), 0.5, &[3.0]).unwrap(), 2.0);
        assert_eq!(ewc_penalty(&[], 0.5, &[3.0]).unwrap(), 0.0);
    }

    #[test]
    fn separate_mode_sums_anchors() {
        let a = anchor(vec![0.2, -1.0], vec![0.7, 1.3]);
        let p = [0.9, 0.4];
        let one = ewc_penalty(std::slice::from_ref(&a), 0.5, &p).unwrap();
        let two = ewc_penalty(&[a.clone(), a], 0.5, &p).unwrap();
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn length_mismatch_is_internal_error() {
        let a = anchor(vec![0.0; 3], vec![1.0; 3]);
        assert!(matches!(
            ewc_penalty(&[a], 1.0, &[0.0; 2]),
            Err(Error::Internal(_))
        ));
    }

    fn tiny_model() -> Mlp {
        Mlp::new(&ModelConfig {
            input_dim: 3,
            hidden_sizes: vec![5],
            n_classes: 4,
            seed: 2,
        })
        .unwrap()
    }

    fn sample(x: [f64; 3], label: usize) -> Sample {
        Sample {
            features: x.to_vec(),
            target_raw: label as f64 / 10.0 + 0.05,
            label,
            task_id: 0,
        }
    }

    #[test]
    fn fisher_single_sample_is_squared_gradient() {
        let m = tiny_model();
        let s = sample([0.5, -0.3, 1.2], 2);
        let f = compute_fisher_diag(&m, std::slice::from_ref(&s)).unwrap();
        let (_, g) = m.data_gradient(&[s.features.as_slice()], &[2]).unwrap();
        for (fi, gi) in f.iter().zip(&g) {
            assert_eq!(*fi, gi * gi);
        }
    }

    #[test]
    fn fisher_nonnegative_and_duplication_invariant() {
        let m = tiny_model();
        let data = vec![
            sample([0.5, -0.3, 1.2], 2),
            sample([-1.0, 0.1, 0.0], 0),
            sample([0.3, 0.3, -2.0], 3),
        ];
        let f = compute_fisher_diag(&m, &data).unwrap();
        assert!(f.iter().all(|&v| v >= 0.0));
        let doubled: Vec<_> = data.iter().flat_map(|s| [s.clone(), s.clone()]).collect();
        let f2 = compute_fisher_diag(&m, &doubled).unwrap();
        for (a, b) in f.iter().zip(&f2) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300));
        }
        assert!(compute_fisher_diag(&m, &[]).is_err());
    }
}

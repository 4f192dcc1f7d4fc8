//! Synaptic Intelligence: per-parameter path integral of loss decrease,
//! consolidated into a single quadratic penalty.

use serde::{Deserialize, Serialize};

use super::{check_len, Strategy, StrategyKind};
use crate::data::Task;
use crate::error::Result;
use crate::nn::{Mlp, TermContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiConfig {
    /// Penalty strength `c`.
    pub lambda: f64,
    /// Damping `ξ` in the importance denominator.
    pub eps: f64,
}

impl Default for SiConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            eps: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiState {
    /// Running path integral `ω` for the current task.
    pub omega_acc: Vec<f64>,
    /// Consolidated importance `Ω`.
    pub importance: Vec<f64>,
    /// Parameters at the start of the current task; also the penalty anchor.
    pub theta_task_start: Vec<f64>,
    pub consolidated: bool,
    pub c: f64,
    pub xi: f64,
}

impl SiState {
    pub fn new(start: &[f64], c: f64, xi: f64) -> Self {
        Self {
            omega_acc: vec![0.0; start.len()],
            importance: vec![0.0; start.len()],
            theta_task_start: start.to_vec(),
            consolidated: false,
            c,
            xi,
        }
    }

    /// `ω ← ω − g ⊙ Δθ`.
    pub fn on_step(&mut self, grad: &[f64], delta: &[f64]) -> Result<()> {
        check_len("si gradient", grad.len(), self.omega_acc.len())?;
        check_len("si delta", delta.len(), self.omega_acc.len())?;
        for ((w, g), d) in self.omega_acc.iter_mut().zip(grad).zip(delta) {
            *w -= g * d;
        }
        Ok(())
    }

    /// Fold the task's path integral into `Ω` and move the anchor to `theta_end`.
    /// Negative contributions are dropped, so `Ω` never decreases.
    pub fn consolidate(&mut self, theta_end: &[f64]) -> Result<()> {
        check_len("si consolidate", theta_end.len(), self.importance.len())?;
        for ((imp, w), (end, start)) in self
            .importance
            .iter_mut()
            .zip(&self.omega_acc)
            .zip(theta_end.iter().zip(&self.theta_task_start))
        {
            let d = end - start;
            let inc = w / (d * d + self.xi);
            if inc > 0.0 {
                *imp += inc;
            }
        }
        self.omega_acc.iter_mut().for_each(|w| *w = 0.0);
        self.theta_task_start.copy_from_slice(theta_end);
        self.consolidated = true;
        Ok(())
    }

    /// `c Σ Ω (θ − θ*)²`, zero before the first consolidation.
    pub fn penalty(&self, params: &[f64]) -> Result<f64> {
        check_len("si penalty", params.len(), self.importance.len())?;
        if !self.consolidated {
            return Ok(0.0);
        }
        let sum: f64 = params
            .iter()
            .zip(&self.theta_task_start)
            .zip(&self.importance)
            .map(|((p, s), o)| o * (p - s) * (p - s))
            .sum();
        Ok(self.c * sum)
    }

    /// Add the gradient of [`SiState::penalty`] into `grad`.
    pub fn penalty_grad(&self, params: &[f64], grad: &mut [f64]) {
        if !self.consolidated {
            return;
        }
        for (((g, p), s), o) in grad
            .iter_mut()
            .zip(params)
            .zip(&self.theta_task_start)
            .zip(&self.importance)
        {
            *g += 2.0 * self.c * o * (p - s);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Si {
    pub config: SiConfig,
    pub state: Option<SiState>,
}

impl Si {
    pub fn new(config: SiConfig) -> Self {
        Self { config, state: None }
    }
}

impl Strategy for Si {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Si
    }

    fn before_task(&mut self, model: &Mlp, _task: &Task) -> Result<()> {
        let state = self
            .state
            .get_or_insert_with(|| SiState::new(model.params(), self.config.lambda, self.config.eps));
        state.omega_acc.iter_mut().for_each(|w| *w = 0.0);
        Ok(())
    }

    fn augment_loss(&mut self, ctx: &mut TermContext<'_>) -> Result<f64> {
        let Some(state) = &self.state else {
            return Ok(0.0);
        };
        let params = ctx.model.params();
        let value = state.penalty(params)?;
        state.penalty_grad(params, ctx.d_params);
        Ok(value)
    }

    fn on_step(&mut self, data_grad: &[f64], param_delta: &[f64]) -> Result<()> {
        match &mut self.state {
            Some(s) => s.on_step(data_grad, param_delta),
            None => Ok(()),
        }
    }

    fn after_task(&mut self, model: &Mlp, _task: &Task) -> Result<()> {
        match &mut self.state {
            Some(s) => s.consolidate(model.params()),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_integral_hand_case() {
        let mut s = SiState::new(&[0.0, 0.0], 1.0, 1e-7);
        s.on_step(&[1.0, -2.0], &[-0.1, 0.1]).unwrap();
        assert!((s.omega_acc[0] - 0.1).abs() < 1e-15);
        assert!((s.omega_acc[1] - 0.2).abs() < 1e-15);
        s.on_step(&[1.0, -2.0], &[-0.1, 0.1]).unwrap();
        assert!((s.omega_acc[0] - 0.2).abs() < 1e-15);
        s.on_step(&[5.0, 5.0], &[0.0, 0.0]).unwrap();
        assert!((s.omega_acc[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn consolidation_hand_case() {
        let mut s = SiState::new(&[0.0], 1.0, 1e-7);
        s.omega_acc[0] = 0.2;
        s.consolidate(&[0.1]).unwrap();
        let expected = 0.2 / (0.01 + 1e-7);
        assert!((s.importance[0] - expected).abs() < 1e-9);
        assert!((s.importance[0] - 19.9998).abs() < 1e-3);
        assert_eq!(s.omega_acc[0], 0.0);
        assert_eq!(s.theta_task_start[0], 0.1);
    }

    #[test]
    fn zero_path_integral_keeps_importance() {
        let mut s = SiState::new(&[0.0, 1.0], 1.0, 1e-7);
        s.importance = vec![3.0, 4.0];
        s.consolidate(&[0.5, 0.5]).unwrap();
        assert_eq!(s.importance, vec![3.0, 4.0]);
    }

    #[test]
    fn negative_contribution_is_floored() {
        let mut s = SiState::new(&[0.0], 1.0, 1e-7);
        s.importance = vec![1.0];
        s.omega_acc = vec![-5.0];
        s.consolidate(&[0.3]).unwrap();
        assert_eq!(s.importance, vec![1.0]);
    }

    #[test]
    fn penalty_values() {
        let mut s = SiState::new(&[0.0], 1.0, 1e-7);
        assert_eq!(s.penalty(&[3.0]).unwrap(), 0.0);
        s.consolidated = true;
        s.importance = vec![2.0];
        assert_eq!(s.penalty(&[0.0]).unwrap(), 0.0);
        assert_eq!(s.penalty(&[0.5]).unwrap(), 0.5);
        s.c = 2.0;
        assert_eq!(s.penalty(&[0.5]).unwrap(), 1.0);
    }
}

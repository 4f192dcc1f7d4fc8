//! Learning without Forgetting: distill the previous task's model on the
//! current inputs with temperature-softened targets.

use serde::{Deserialize, Serialize};

use super::{Strategy, StrategyKind};
use crate::data::Task;
use crate::error::{Error, Result};
use crate::nn::{log_softmax_row, Matrix, Mlp, TermContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LwfConfig {
    pub alpha: f64,
    pub temperature: f64,
}

impl Default for LwfConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            temperature: 2.0,
        }
    }
}

/// `α T² · mean_b KL(softmax(teacher/T) ‖ softmax(current/T))` and its
/// gradient with respect to `current`. The teacher is a constant.
pub fn lwf_loss(teacher: &Matrix, current: &Matrix, alpha: f64, temperature: f64) -> Result<(f64, Matrix)> {
    if teacher.rows() != current.rows() || teacher.cols() != current.cols() {
        return Err(Error::Internal(format!(
            "lwf: teacher {}x{} vs current {}x{}",
            teacher.rows(),
            teacher.cols(),
            current.rows(),
            current.cols()
        )));
    }
    let batch = current.rows() as f64;
    let t = temperature;
    let mut grad = Matrix::zeros(current.rows(), current.cols());
    let mut total = 0.0;
    for b in 0..current.rows() {
        let scaled_t: Vec<f64> = teacher.row(b).iter().map(|z| z / t).collect();
        let scaled_c: Vec<f64> = current.row(b).iter().map(|z| z / t).collect();
        let log_p = log_softmax_row(&scaled_t);
        let log_q = log_softmax_row(&scaled_c);
        let mut kl = 0.0;
        let g = grad.row_mut(b);
        for k in 0..log_p.len() {
            let p = log_p[k].exp();
            if p > 0.0 {
                kl += p * (log_p[k] - log_q[k]);
            }
            g[k] = alpha * t * (log_q[k].exp() - p) / batch;
        }
        total += kl;
    }
    Ok((alpha * t * t * total / batch, grad))
}

#[derive(Debug, Clone)]
pub struct Lwf {
    pub config: LwfConfig,
    /// Frozen copy of the model from the end of the previous task.
    pub teacher: Option<Mlp>,
}

impl Lwf {
    pub fn new(config: LwfConfig) -> Self {
        Self {
            config,
            teacher: None,
        }
    }
}

impl Strategy for Lwf {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Lwf
    }

    fn augment_loss(&mut self, ctx: &mut TermContext<'_>) -> Result<f64> {
        let Some(teacher) = &self.teacher else {
            return Ok(0.0);
        };
        let teacher_logits = teacher.forward(ctx.inputs)?;
        let (value, grad) = lwf_loss(
            &teacher_logits,
            ctx.logits,
            self.config.alpha,
            self.config.temperature,
        )?;
        for (d, g) in ctx.d_logits.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *d += g;
        }
        Ok(value)
    }

    fn after_task(&mut self, model: &Mlp, _task: &Task) -> Result<()> {
        self.teacher = Some(model.clone());
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use super::Mlp;
use crate::error::{Error, Result};

/// Adam optimizer state with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPSILON: f64 = 1e-8;

    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            learning_rate,
            beta1: Self::BETA1,
            beta2: Self::BETA2,
            epsilon: Self::EPSILON,
        }
    }

    /// One update of `model` along `grad`. Returns the realized parameter change.
    pub fn step(&mut self, model: &mut Mlp, grad: &[f64]) -> Result<Vec<f64>> {
        self.step_slice(model.params_mut(), grad)
    }

    /// Same as [`step`](Self::step) on a bare parameter vector.
    ///
    /// A non-finite gradient is rejected before anything is touched.
    pub fn step_slice(&mut self, params: &mut [f64], grad: &[f64]) -> Result<Vec<f64>> {
        if grad.len() != params.len() || self.m.len() != params.len() {
            return Err(Error::Shape(format!(
                "adam: {} params, {} gradient entries, {} moments",
                params.len(),
                grad.len(),
                self.m.len()
            )));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric {
                layer: 0,
                message: format!("non-finite gradient at flat index {i}, step not applied"),
            });
        }

        let t = self.t + 1;
        let bc1 = 1.0 - self.beta1.powi(t as i32);
        let bc2 = 1.0 - self.beta2.powi(t as i32);
        let mut updated = params.to_vec();
        let mut m = self.m.clone();
        let mut v = self.v.clone();
        for i in 0..params.len() {
            let g = grad[i];
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            updated[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        if let Some(i) = updated.iter().position(|p| !p.is_finite()) {
            return Err(Error::Numeric {
                layer: 0,
                message: format!("parameter {i} became non-finite, step not applied"),
            });
        }

        let delta = updated.iter().zip(params.iter()).map(|(n, o)| n - o).collect();
        params.copy_from_slice(&updated);
        self.m = m;
        self.v = v;
        self.t = t;
        Ok(delta)
    }
}

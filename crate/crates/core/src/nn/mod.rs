//! Feed-forward classifier with exact reverse-mode gradients.
//!
//! Hidden layers use ReLU; the output layer is linear and produces logits.
//! Weights are Xavier-uniform, biases start at zero. Everything is `f64`.

mod adam;
mod loss;
mod matrix;
mod model;

pub use adam::AdamState;
pub use loss::{log_softmax_row, loss_ce, softmax_row};
pub use matrix::Matrix;
pub use model::{Backward, FlatParams, LayerShape, LossTerm, Mlp, ModelConfig, TermContext};

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

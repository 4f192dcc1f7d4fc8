//! Continual-learning benchmark for performance models under real concept drift.
//!
//! A small MLP classifier is trained sequentially over a stream of tasks whose
//! input distribution stays fixed while the input-to-target relation shifts at
//! task boundaries. Seven strategies are provided (Naive, EWC, SI, LwF, A-GEM,
//! GSS-Greedy, GDumb) and each run reports Average Accuracy and Average
//! Forgetting after every task.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod nn;
pub mod seed;
pub mod strategies;

pub use error::{Error, Result};

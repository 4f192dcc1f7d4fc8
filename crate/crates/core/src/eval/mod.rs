//! Accuracy bookkeeping, the two continual-learning metrics, and the
//! sequential training loop that fills them.

mod metrics;
mod train;

pub use metrics::{avg_accuracy, avg_forgetting, AccuracyMatrix};
pub use train::{
    evaluate, fit, run_strategy, CurvePoint, MetricsReport, RunMetadata, TaskMetrics, TrainConfig,
};

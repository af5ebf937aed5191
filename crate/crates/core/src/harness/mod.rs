//! Losses, metrics, normalization, training and evaluation.

mod metrics;
mod models;
mod normalize;
mod report;
mod train;

pub use metrics::{loss_mse, loss_weighted, rel_err, rel_l2, rel_l2_rows, row_weights, weighted_loss_and_grad};
pub use models::{build_model, train_any, ModelSpec};
pub use normalize::{gaussian_normalize, GaussianStats, SIGMA_FLOOR};
pub use report::{evaluate, report_from_predictions, write_history, write_report, Report, SampleReport};
pub use train::{train, EpochRecord, LossKind, Normalization, RunHistory, TrainConfig, TrainOutcome};

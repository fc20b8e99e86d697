//! Training loops, evaluation and sweep drivers producing result rows.

mod eval;
mod experiments;
mod gated;
mod pool;
mod result;
mod train;

pub use eval::{accuracy_by, classify, eval_classification, eval_regression};
pub use experiments::{
    sweep, CompareCell, Experiment, FloatsCell, PiecewiseCell, RecurrentCell, RedundancyCell, RedundancyTask, SsspCell, MLP,
    NSR, NSR_GATED,
};
pub use gated::{GatedPiecewise, GatedTrace};
pub use pool::{run_ordered, workers_from_env, WORKERS_ENV};
pub use result::{read_results, Metric, ResultWriter, RunResult, CSV_HEADER};
pub use train::{mae_epoch, train, train_with, LossCurve, TrainConfig};

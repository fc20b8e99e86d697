//! Neural status registers: a differentiable comparison layer, its
//! baselines, task generators and the experiment harness around them.

pub mod autodiff;
pub mod baselines;
pub mod error;
pub mod gnn;
pub mod harness;
pub mod model;
pub mod nsr;
pub mod recurrent;
pub mod selftest;
pub mod snapshot;
pub mod tasks;

pub use error::{Error, Result, Shape};
pub use model::ScalarModel;

//! Reverse-mode differentiation, Adam, seeded randomness and gradient checks.

mod adam;
mod gradcheck;
mod param;
mod rng;
mod tape;

pub use adam::Adam;
pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport, ParamCheck, ABS_FLOOR};
pub use param::{GradBuffer, Model, Parameter};
pub use rng::RngStream;
pub use tape::{Gradients, Tape, Var};

pub(crate) use tape::{sigmoid, softmax_into};

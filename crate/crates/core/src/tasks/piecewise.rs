use std::fmt;
use std::str::FromStr;

use super::comparison::TRAIN_RANGE;
use super::{Dataset, Example, Magnitude};
use crate::autodiff::RngStream;
use crate::error::{Error, Result};

/// Range of the non-comparison inputs of `f`, inclusive.
const FREE_RANGE: (i64, i64) = (-100, 100);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PiecewiseFn {
    /// `x1 - x2` if `x1 > x2`, else `x2 - x1`.
    Abs,
    /// `x5 + 4` if `x1 > x2`, else `x4 - x3`.
    F,
}

impl PiecewiseFn {
    pub fn input_dim(self) -> usize {
        match self {
            PiecewiseFn::Abs => 2,
            PiecewiseFn::F => 5,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            PiecewiseFn::Abs => {
                if x[0] > x[1] {
                    x[0] - x[1]
                } else {
                    x[1] - x[0]
                }
            }
            PiecewiseFn::F => {
                if x[0] > x[1] {
                    x[4] + 4.0
                } else {
                    x[3] - x[2]
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PiecewiseFn::Abs => "abs",
            PiecewiseFn::F => "f",
        }
    }

    fn example(self, a: i64, b: i64, rng: &mut RngStream) -> Example {
        let mut inputs = vec![a as f64, b as f64];
        if self == PiecewiseFn::F {
            for _ in 0..3 {
                inputs.push(rng.int_inclusive(FREE_RANGE.0, FREE_RANGE.1) as f64);
            }
        }
        let target = self.eval(&inputs);
        Example { inputs, target }
    }
}

impl fmt::Display for PiecewiseFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PiecewiseFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" => Ok(PiecewiseFn::Abs),
            "f" => Ok(PiecewiseFn::F),
            _ => Err(Error::InvalidConfig(format!("unknown piecewise function `{s}` (expected abs or f)"))),
        }
    }
}

/// One example per comparison pair from the training range.
pub fn piecewise_set(func: PiecewiseFn, rng: &mut RngStream) -> Dataset {
    let (lo, hi) = TRAIN_RANGE;
    let mut examples = Vec::with_capacity(400);
    for a in lo..=hi {
        for b in lo..=hi {
            examples.push(func.example(a, b, rng));
        }
    }
    Dataset { examples }
}

/// Comparison inputs `(n, n + i)` for `i ∈ [-5, 5]` around a random `n` of
/// the given magnitude; other inputs drawn from the free range.
pub fn piecewise_extrapolation(func: PiecewiseFn, magnitude: Magnitude, rng: &mut RngStream) -> Dataset {
    let n = magnitude.sample(rng);
    let examples = (-5..=5).map(|i| func.example(n, n + i, rng)).collect();
    Dataset { examples }
}

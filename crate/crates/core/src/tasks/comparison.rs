use std::fmt;
use std::str::FromStr;

use super::{Dataset, Example, Magnitude};
use crate::autodiff::RngStream;
use crate::error::{Error, Result};

/// Integers used for every training pair, inclusive.
pub const TRAIN_RANGE: (i64, i64) = (-10, 9);

/// Half-width of the neighbourhood probed around an extrapolation sample.
const NEIGHBOURHOOD: i64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComparisonOp {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Ne,
}

impl ComparisonOp {
    pub const ALL: [ComparisonOp; 6] =
        [ComparisonOp::Gt, ComparisonOp::Lt, ComparisonOp::Ge, ComparisonOp::Le, ComparisonOp::Eq, ComparisonOp::Ne];

    pub fn truth<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            ComparisonOp::Gt => a > b,
            ComparisonOp::Lt => a < b,
            ComparisonOp::Ge => a >= b,
            ComparisonOp::Le => a <= b,
            ComparisonOp::Eq => a == b,
            ComparisonOp::Ne => a != b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ComparisonOp::Gt => "gt",
            ComparisonOp::Lt => "lt",
            ComparisonOp::Ge => "ge",
            ComparisonOp::Le => "le",
            ComparisonOp::Eq => "eq",
            ComparisonOp::Ne => "ne",
        }
    }

    /// Equality-type ops get rebalanced extrapolation suites.
    pub fn is_equality(self) -> bool {
        matches!(self, ComparisonOp::Eq | ComparisonOp::Ne)
    }
}

impl fmt::Display for ComparisonOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ComparisonOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ComparisonOp::ALL
            .into_iter()
            .find(|op| op.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown comparison `{s}` (expected gt, lt, ge, le, eq, ne)")))
    }
}

fn label(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// All 400 integer pairs from the training range, scaled by `delta`.
pub fn comparison_train_set(op: ComparisonOp, delta: f64) -> Result<Dataset> {
    check_delta(delta)?;
    let (lo, hi) = TRAIN_RANGE;
    let mut examples = Vec::with_capacity(400);
    for a in lo..=hi {
        for b in lo..=hi {
            examples.push(Example { inputs: vec![a as f64 * delta, b as f64 * delta], target: label(op.truth(a, b)) });
        }
    }
    Ok(Dataset { examples })
}

/// A random `n` of the given magnitude compared against `n + i` for
/// `i ∈ [-5, 5]`. Equality ops additionally get the ten pairs `(n+i, n+i)`,
/// `i ≠ 0`, so both classes are (nearly) equally represented.
pub fn extrapolation_suite(op: ComparisonOp, magnitude: Magnitude, delta: f64, rng: &mut RngStream) -> Result<Dataset> {
    check_delta(delta)?;
    let n = magnitude.sample(rng);
    let mut examples = Vec::with_capacity(21);
    let mut push = |a: i64, b: i64| {
        examples.push(Example { inputs: vec![a as f64 * delta, b as f64 * delta], target: label(op.truth(a, b)) });
    };
    for i in -NEIGHBOURHOOD..=NEIGHBOURHOOD {
        push(n, n + i);
    }
    if op.is_equality() {
        for i in (-NEIGHBOURHOOD..=NEIGHBOURHOOD).filter(|&i| i != 0) {
            push(n + i, n + i);
        }
    }
    Ok(Dataset { examples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has(ds: &Dataset, x: [f64; 2], target: f64) -> bool {
        ds.examples
            .iter()
            .any(|e| (e.inputs[0] - x[0]).abs() < 1e-12 && (e.inputs[1] - x[1]).abs() < 1e-12 && e.target == target)
    }

    #[test]
    fn train_set_contents() {
        let gt = comparison_train_set(ComparisonOp::Gt, 1.0).unwrap();
        assert_eq!(gt.len(), 400);
        assert!(has(&gt, [9.0, -10.0], 1.0));
        assert!(has(&gt, [-10.0, -10.0], 0.0));
        let eq = comparison_train_set(ComparisonOp::Eq, 1.0).unwrap();
        assert_eq!(eq.examples.iter().filter(|e| e.target == 1.0).count(), 20);
        let scaled = comparison_train_set(ComparisonOp::Gt, 0.01).unwrap();
        assert!(has(&scaled, [0.09, -0.10], 1.0));
    }

    #[test]
    fn bad_delta_rejected() {
        assert!(comparison_train_set(ComparisonOp::Gt, 0.0).is_err());
        assert!(comparison_train_set(ComparisonOp::Gt, f64::NAN).is_err());
    }

    #[test]
    fn suite_structure() {
        let mut rng = RngStream::new(0);
        let m = Magnitude::new(10, 2).unwrap();
        let gt = extrapolation_suite(ComparisonOp::Gt, m, 1.0, &mut rng).unwrap();
        assert_eq!(gt.len(), 11);
        let n = gt.examples[0].inputs[0];
        assert!((100.0..1000.0).contains(&n));
        assert!(has(&gt, [n, n - 5.0], 1.0));
        assert!(has(&gt, [n, n + 5.0], 0.0));
        assert!(has(&gt, [n, n], 0.0));
    }

    #[test]
    fn equality_suites_are_rebalanced() {
        for op in [ComparisonOp::Eq, ComparisonOp::Ne] {
            let mut rng = RngStream::new(4);
            let ds = extrapolation_suite(op, Magnitude::new(10, 6).unwrap(), 1.0, &mut rng).unwrap();
            assert_eq!(ds.len(), 21);
            let pos = ds.examples.iter().filter(|e| e.target == 1.0).count() as i64;
            assert!((pos - (21 - pos)).abs() <= 1, "{op}: {pos} positives");
        }
        let mut rng = RngStream::new(4);
        let eq = extrapolation_suite(ComparisonOp::Eq, Magnitude::new(10, 6).unwrap(), 1.0, &mut rng).unwrap();
        assert_eq!(eq.examples[..11].iter().filter(|e| e.target == 1.0).count(), 1);
        assert!(eq.examples[11..].iter().all(|e| e.target == 1.0));
    }

    #[test]
    fn equal_pair_label_matches_op_on_equal_arguments() {
        for op in ComparisonOp::ALL {
            let mut rng = RngStream::new(2);
            let ds = extrapolation_suite(op, Magnitude::new(3, 5).unwrap(), 1.0, &mut rng).unwrap();
            let e = &ds.examples[5];
            assert_eq!(e.inputs[0], e.inputs[1]);
            assert_eq!(e.target == 1.0, op.truth(0, 0));
        }
    }

    #[test]
    fn scaled_neighbours_are_delta_apart() {
        let mut rng = RngStream::new(5);
        let ds = extrapolation_suite(ComparisonOp::Gt, Magnitude::new(10, 4).unwrap(), 0.001, &mut rng).unwrap();
        for w in ds.examples.windows(2) {
            assert!((w[1].inputs[1] - w[0].inputs[1] - 0.001).abs() < 1e-9);
        }
    }

    #[test]
    fn parse_ops() {
        assert_eq!("GE".parse::<ComparisonOp>().unwrap(), ComparisonOp::Ge);
        assert!("bogus".parse::<ComparisonOp>().is_err());
    }
}

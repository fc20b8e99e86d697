//! Dataset generators with exact ground-truth oracles.
//!
//! Every generator is a pure function of its arguments and the random
//! stream it is handed, so regenerating from the same seed is bit-identical.

mod comparison;
mod graph;
mod piecewise;
mod sequence;

pub use comparison::{comparison_train_set, extrapolation_suite, ComparisonOp, TRAIN_RANGE};
pub use graph::{bellman_ford, random_graph, reference_distances, WeightedGraph};
pub use piecewise::{piecewise_extrapolation, piecewise_set, PiecewiseFn};
pub use sequence::{sequence_set, write_sequences_csv, SequenceExample, SequenceKind, ValueRange};

use std::fmt;
use std::io::Write;

use crate::autodiff::RngStream;
use crate::error::{Error, Result};

/// One supervised example.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub inputs: Vec<f64>,
    pub target: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.examples.first().map(|e| e.inputs.len())
    }

    /// Header `x1,...,xn,target`, one row per example.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = self.examples.iter().map(|e| (e.inputs.as_slice(), e.target));
        write_rows_csv(out, self.input_dim().unwrap_or(0), rows)
    }
}

pub(crate) fn write_rows_csv<'a, W: Write>(
    out: W,
    width: usize,
    rows: impl Iterator<Item = (&'a [f64], f64)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=width).map(|i| format!("x{i}")).collect();
    header.push("target".into());
    w.write_record(&header)?;
    for (inputs, target) in rows {
        let mut rec: Vec<String> = inputs.iter().map(|v| v.to_string()).collect();
        rec.push(target.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `base^exp`: the order of magnitude an extrapolation sample is drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Magnitude {
    pub base: u32,
    pub exp: u32,
}

impl Magnitude {
    pub fn new(base: u32, exp: u32) -> Result<Self> {
        let m = Magnitude { base, exp };
        if base < 2 {
            return Err(Error::InvalidConfig(format!("magnitude base must be >= 2, got {base}")));
        }
        m.upper().ok_or_else(|| Error::InvalidConfig(format!("{base}^{} overflows", exp + 1)))?;
        Ok(m)
    }

    fn lower(&self) -> i64 {
        i64::from(self.base).pow(self.exp)
    }

    fn upper(&self) -> Option<i64> {
        i64::from(self.base).checked_pow(self.exp + 1)
    }

    /// Uniform integer in `[base^exp, base^(exp+1))`.
    pub fn sample(&self, rng: &mut RngStream) -> i64 {
        let hi = self.upper().expect("validated on construction");
        rng.int_inclusive(self.lower(), hi - 1)
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.base, self.exp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Comparison(ComparisonOp),
    Piecewise(PiecewiseFn),
    Sequence(SequenceKind),
    ShortestPath,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Comparison(op) => write!(f, "comparison-{op}"),
            TaskKind::Piecewise(func) => write!(f, "piecewise-{func}"),
            TaskKind::Sequence(kind) => write!(f, "sequence-{kind}"),
            TaskKind::ShortestPath => f.write_str("sssp"),
        }
    }
}

/// Declarative description of one generated set. `magnitude == None` means
/// the training distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub delta: f64,
    pub magnitude: Option<Magnitude>,
    pub seq_len: Option<usize>,
    pub num_lists: usize,
    pub seed: u64,
}

impl TaskSpec {
    pub fn new(kind: TaskKind, seed: u64) -> Self {
        TaskSpec { kind, delta: 1.0, magnitude: None, seq_len: None, num_lists: 0, seed }
    }

    pub fn with_magnitude(mut self, m: Magnitude) -> Self {
        self.magnitude = Some(m);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_sequences(mut self, num_lists: usize, len: usize) -> Self {
        self.num_lists = num_lists;
        self.seq_len = Some(len);
        self
    }

    /// Stream derived from the seed and every field that shapes the data.
    pub fn rng(&self) -> RngStream {
        let label = format!(
            "{}|{}|{:?}|{:?}|{}",
            self.kind,
            self.delta.to_bits(),
            self.magnitude.map(|m| (m.base, m.exp)),
            self.seq_len,
            self.num_lists
        );
        RngStream::new(self.seed).split_named(&label)
    }

    /// Pointwise datasets (comparison and piecewise tasks).
    pub fn dataset(&self) -> Result<Dataset> {
        let mut rng = self.rng();
        match (self.kind, self.magnitude) {
            (TaskKind::Comparison(op), None) => comparison_train_set(op, self.delta),
            (TaskKind::Comparison(op), Some(m)) => extrapolation_suite(op, m, self.delta, &mut rng),
            (TaskKind::Piecewise(func), None) => Ok(piecewise_set(func, &mut rng)),
            (TaskKind::Piecewise(func), Some(m)) => Ok(piecewise_extrapolation(func, m, &mut rng)),
            (kind, _) => Err(Error::InvalidConfig(format!("{kind} does not produce a pointwise dataset"))),
        }
    }

    /// List datasets for the recurrent tasks.
    pub fn sequences(&self) -> Result<Vec<SequenceExample>> {
        let TaskKind::Sequence(kind) = self.kind else {
            return Err(Error::InvalidConfig(format!("{} does not produce sequences", self.kind)));
        };
        let len = self.seq_len.ok_or_else(|| Error::InvalidConfig("sequence length missing".into()))?;
        let range = self.magnitude.map_or(ValueRange::Train, ValueRange::Around);
        sequence_set(kind, self.num_lists, len, range, &mut self.rng())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnitude_sample_stays_in_decade() {
        let m = Magnitude::new(10, 2).unwrap();
        let mut rng = RngStream::new(1);
        for _ in 0..500 {
            let n = m.sample(&mut rng);
            assert!((100..1000).contains(&n));
        }
        assert!(Magnitude::new(10, 13).is_ok());
        assert!(Magnitude::new(10, 30).is_err());
        assert!(Magnitude::new(1, 3).is_err());
    }

    #[test]
    fn spec_regeneration_is_bit_identical() {
        let spec = TaskSpec::new(TaskKind::Comparison(ComparisonOp::Eq), 17).with_magnitude(Magnitude::new(10, 6).unwrap());
        assert_eq!(spec.dataset().unwrap(), spec.dataset().unwrap());
        let seq = TaskSpec::new(TaskKind::Sequence(SequenceKind::Min), 3).with_sequences(20, 7);
        assert_eq!(seq.sequences().unwrap(), seq.sequences().unwrap());
    }

    #[test]
    fn dataset_csv_has_header_and_rows() {
        let ds = comparison_train_set(ComparisonOp::Gt, 1.0).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x1,x2,target"));
        assert_eq!(lines.count(), 400);
    }
}

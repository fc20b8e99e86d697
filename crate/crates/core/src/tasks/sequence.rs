use std::fmt;
use std::str::FromStr;

use super::comparison::TRAIN_RANGE;
use super::Magnitude;
use crate::autodiff::RngStream;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SequenceKind {
    /// Minimum of the list.
    Min,
    /// Occurrences of the head element in the tail.
    Count,
}

impl SequenceKind {
    pub fn target(self, list: &[f64]) -> f64 {
        match self {
            SequenceKind::Min => list.iter().copied().fold(f64::INFINITY, f64::min),
            SequenceKind::Count => list[1..].iter().filter(|&&x| x == list[0]).count() as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::Min => "min",
            SequenceKind::Count => "count",
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(SequenceKind::Min),
            "count" => Ok(SequenceKind::Count),
            _ => Err(Error::InvalidConfig(format!("unknown sequence task `{s}` (expected min or count)"))),
        }
    }
}

/// Where list elements come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueRange {
    /// The integer training range.
    Train,
    /// `[n-5, n+5]` around a fresh `n` of this magnitude per list.
    Around(Magnitude),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceExample {
    pub list: Vec<f64>,
    pub target: f64,
}

pub fn sequence_set(
    kind: SequenceKind,
    num_lists: usize,
    length: usize,
    range: ValueRange,
    rng: &mut RngStream,
) -> Result<Vec<SequenceExample>> {
    if length < 2 {
        return Err(Error::InvalidConfig(format!("sequence length must be >= 2, got {length}")));
    }
    let mut out = Vec::with_capacity(num_lists);
    for _ in 0..num_lists {
        let (lo, hi) = match range {
            ValueRange::Train => TRAIN_RANGE,
            ValueRange::Around(m) => {
                let n = m.sample(rng);
                (n - 5, n + 5)
            }
        };
        let list: Vec<f64> = (0..length).map(|_| rng.int_inclusive(lo, hi) as f64).collect();
        let target = kind.target(&list);
        out.push(SequenceExample { list, target });
    }
    Ok(out)
}

/// Writes lists as `x1..xk,target` rows.
pub fn write_sequences_csv<W: std::io::Write>(out: W, set: &[SequenceExample]) -> Result<()> {
    let width = set.first().map_or(0, |s| s.list.len());
    super::write_rows_csv(out, width, set.iter().map(|s| (s.list.as_slice(), s.target)))
}

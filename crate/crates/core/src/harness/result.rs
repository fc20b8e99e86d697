use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tasks::Magnitude;

pub const CSV_HEADER: [&str; 12] = [
    "task",
    "op",
    "model",
    "seed",
    "magnitude_base",
    "magnitude_exp",
    "seq_len",
    "delta",
    "lambda",
    "redundancy",
    "metric",
    "value",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    NormalizedMae,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Accuracy => "accuracy",
            Metric::NormalizedMae => "normalized_mae",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "normalized_mae" => Ok(Metric::NormalizedMae),
            _ => Err(Error::InvalidConfig(format!("unknown metric `{s}`"))),
        }
    }
}

/// One row of the results table. `magnitude == None` is the training
/// distribution; `value == None` marks a failed run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub task: String,
    pub op: String,
    pub model: String,
    pub seed: u64,
    pub magnitude: Option<Magnitude>,
    pub seq_len: Option<usize>,
    pub delta: f64,
    pub lambda: Option<f64>,
    pub redundancy: Option<usize>,
    pub metric: Metric,
    pub value: Option<f64>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_opt<T: FromStr>(s: &str, column: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|e| Error::InvalidConfig(format!("column `{column}`: cannot parse `{s}`: {e}")))
}

impl RunResult {
    pub fn record(&self) -> [String; 12] {
        [
            self.task.clone(),
            self.op.clone(),
            self.model.clone(),
            self.seed.to_string(),
            opt(self.magnitude.map(|m| m.base)),
            opt(self.magnitude.map(|m| m.exp)),
            opt(self.seq_len),
            self.delta.to_string(),
            opt(self.lambda),
            opt(self.redundancy),
            self.metric.to_string(),
            opt(self.value.filter(|v| !v.is_nan())),
        ]
    }

    pub fn from_record(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::InvalidConfig(format!("expected {} columns, got {}", CSV_HEADER.len(), rec.len())));
        }
        let base: Option<u32> = parse_opt(&rec[4], "magnitude_base")?;
        let exp: Option<u32> = parse_opt(&rec[5], "magnitude_exp")?;
        let magnitude = match (base, exp) {
            (Some(b), Some(e)) => Some(Magnitude::new(b, e)?),
            (None, None) => None,
            _ => return Err(Error::InvalidConfig("magnitude base and exponent must both be set or both empty".into())),
        };
        Ok(RunResult {
            task: rec[0].to_string(),
            op: rec[1].to_string(),
            model: rec[2].to_string(),
            seed: parse_opt(&rec[3], "seed")?.ok_or_else(|| Error::InvalidConfig("seed is empty".into()))?,
            magnitude,
            seq_len: parse_opt(&rec[6], "seq_len")?,
            delta: parse_opt(&rec[7], "delta")?.ok_or_else(|| Error::InvalidConfig("delta is empty".into()))?,
            lambda: parse_opt(&rec[8], "lambda")?,
            redundancy: parse_opt(&rec[9], "redundancy")?,
            metric: rec[10].parse()?,
            value: parse_opt(&rec[11], "value")?,
        })
    }
}

/// Row-at-a-time CSV writer; every row is flushed so a partial file is
/// always a valid table.
pub struct ResultWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ResultWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(CSV_HEADER)?;
        inner.flush()?;
        Ok(ResultWriter { inner })
    }

    pub fn write(&mut self, row: &RunResult) -> Result<()> {
        self.inner.write_record(row.record())?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

impl ResultWriter<File> {
    /// Creates or truncates `path`.
    pub fn create(path: &Path) -> Result<Self> {
        ResultWriter::new(File::create(path)?)
    }

    /// Appends to `path`, writing the header only if the file is new or empty.
    pub fn append(path: &Path) -> Result<Self> {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            return ResultWriter::new(file);
        }
        Ok(ResultWriter { inner: csv::Writer::from_writer(file) })
    }
}

pub fn read_results(path: &Path) -> Result<Vec<RunResult>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidConfig(format!("unexpected header in {}", path.display())));
    }
    reader.records().map(|r| RunResult::from_record(&r?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: Option<f64>) -> RunResult {
        RunResult {
            task: "compare".into(),
            op: "gt".into(),
            model: "nsr".into(),
            seed: 3,
            magnitude: Some(Magnitude::new(10, 6).unwrap()),
            seq_len: None,
            delta: 0.01,
            lambda: Some(100.0),
            redundancy: Some(10),
            metric: Metric::Accuracy,
            value,
        }
    }

    #[test]
    fn record_layout() {
        let r = row(Some(0.5));
        assert_eq!(r.record().join(","), "compare,gt,nsr,3,10,6,,0.01,100,10,accuracy,0.5");
        assert_eq!(row(Some(f64::NAN)).record()[11], "");
        assert_eq!(row(None).record()[11], "");
    }

    #[test]
    fn write_then_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![row(Some(0.25)), row(None), RunResult { magnitude: None, lambda: None, ..row(Some(1.0)) }];
        {
            let mut w = ResultWriter::create(&path).unwrap();
            w.write(&rows[0]).unwrap();
        }
        {
            let mut w = ResultWriter::append(&path).unwrap();
            w.write(&rows[1]).unwrap();
            w.write(&rows[2]).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(text.lines().count(), 4);
        assert_eq!(read_results(&path).unwrap(), rows);
    }

    #[test]
    fn bad_rows_rejected() {
        let rec = csv::StringRecord::from(vec!["t", "o", "m", "x", "", "", "", "1", "", "", "accuracy", ""]);
        assert!(RunResult::from_record(&rec).is_err());
        let rec = csv::StringRecord::from(vec!["t", "o", "m", "1", "10", "", "", "1", "", "", "accuracy", ""]);
        assert!(RunResult::from_record(&rec).is_err());
    }
}

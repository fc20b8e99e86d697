//! Plain-text parameter snapshots.
//!
//! One entry per line: `name shape v1 v2 ...`, where `shape` is `scalar` or
//! dimensions joined by `x`, and values are row-major with 17 significant
//! digits so every `f64` round-trips exactly.

use std::fmt::{self, Write as _};

use crate::autodiff::Model;
use crate::error::{Error, Result, Shape};
use crate::nsr::NsrParams;

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub name: String,
    pub shape: Shape,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Snapshot {
    pub entries: Vec<Entry>,
}

impl Snapshot {
    /// Captures the current values of every parameter, in model order.
    pub fn of<M: Model + ?Sized>(model: &M) -> Self {
        let entries = model
            .parameters()
            .into_iter()
            .map(|p| Entry { name: p.name.clone(), shape: p.shape.clone(), values: p.value.clone() })
            .collect();
        Snapshot { entries }
    }

    pub fn push_scalar(&mut self, name: &str, value: f64) {
        self.entries.push(Entry { name: name.into(), shape: Shape::scalar(), values: vec![value] });
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        match self.get(name) {
            Some(e) if e.shape.is_scalar() => Ok(e.values[0]),
            Some(e) => Err(Error::InvalidConfig(format!("`{name}` has shape {}, expected scalar", e.shape))),
            None => Err(Error::InvalidConfig(format!("snapshot has no `{name}` entry"))),
        }
    }

    /// Overwrites every parameter of `model` from the entry of the same
    /// name. Shapes must match; extra entries are ignored.
    pub fn apply_to<M: Model + ?Sized>(&self, model: &mut M) -> Result<()> {
        for p in model.parameters_mut() {
            let e = self
                .get(&p.name)
                .ok_or_else(|| Error::InvalidConfig(format!("snapshot has no `{}` entry", p.name)))?;
            if e.shape != p.shape {
                return Err(Error::ShapeMismatch {
                    op: "snapshot_apply",
                    detail: format!("`{}` is {} in the model, {} in the snapshot", p.name, p.shape, e.shape),
                });
            }
            p.value.copy_from_slice(&e.values);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let mut parts = line.split_whitespace();
            let name = parts.next().expect("line is not blank").to_string();
            let shape = parse_shape(parts.next().ok_or_else(|| err(format!("`{name}` has no shape")))?)
                .map_err(err)?;
            let values = parts
                .map(|v| v.parse::<f64>().map_err(|e| err(format!("`{name}`: bad value `{v}`: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            let expected = if shape.is_scalar() { 1 } else { shape.len() };
            if values.len() != expected {
                return Err(err(format!("`{name}` has {} values, shape {shape} needs {expected}", values.len())));
            }
            entries.push(Entry { name, shape, values });
        }
        Ok(Snapshot { entries })
    }
}

fn parse_shape(s: &str) -> std::result::Result<Shape, String> {
    if s == "scalar" {
        return Ok(Shape::scalar());
    }
    s.split('x')
        .map(|d| d.parse::<usize>().map_err(|e| format!("bad shape `{s}`: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Shape)
}

impl fmt::Display for Snapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let mut line = format!("{} {}", e.name, e.shape);
            for v in &e.values {
                let _ = write!(line, " {v:.16e}");
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl NsrParams {
    /// Parameters plus the fixed `lambda`.
    pub fn snapshot(&self) -> Snapshot {
        let mut s = Snapshot::of(self);
        s.push_scalar("lambda", self.lambda);
        s
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Self> {
        let get = |name: &str| {
            s.get(name)
                .map(|e| e.values.clone())
                .ok_or_else(|| Error::InvalidConfig(format!("snapshot has no `{name}` entry")))
        };
        let first = s
            .get("select_first")
            .ok_or_else(|| Error::InvalidConfig("snapshot has no `select_first` entry".into()))?;
        let n = *first.shape.dims().get(1).ok_or_else(|| Error::ShapeMismatch {
            op: "snapshot_apply",
            detail: format!("select_first must be a matrix, got {}", first.shape),
        })?;
        NsrParams::from_values(
            n,
            get("select_first")?,
            get("select_second")?,
            get("w_sign")?,
            get("w_zero")?,
            get("bias")?,
            s.scalar("lambda")?,
        )
    }
}

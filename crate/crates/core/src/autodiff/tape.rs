//! Reverse-mode differentiation over scalars, vectors and row-major matrices.
//!
//! Nodes are appended in evaluation order, so every node's inputs have a
//! smaller index than the node itself and a single reverse sweep over the
//! node list is a valid topological traversal.

use std::collections::BTreeMap;

use super::param::{Model, Parameter};
use crate::error::{Error, Result, Shape};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MatVec(Var, Var),
    Sum(Var),
    Tanh(Var),
    Sigmoid(Var),
    Softmax(Var),
    Abs(Var),
    Row(Var, usize),
    Index(Var, usize),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    shape: Shape,
    value: Vec<f64>,
}

/// Append-only record of a computation.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(Var, String)>,
}

/// Gradients of a scalar output with respect to every registered parameter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    by_param: BTreeMap<String, Vec<f64>>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.by_param.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_param.keys().map(String::as_str)
    }

    /// Adds each gradient into the matching parameter's `grad` field.
    pub fn accumulate_into<M: Model + ?Sized>(&self, model: &mut M) {
        for p in model.parameters_mut() {
            if let Some(g) = self.by_param.get(&p.name) {
                for (dst, src) in p.grad.iter_mut().zip(g) {
                    *dst += src;
                }
            }
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Max-shifted softmax of `logits` written into `out`.
pub(crate) fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn shape(&self, v: Var) -> &Shape {
        &self.nodes[v.0].shape
    }

    fn push(&mut self, op: Op, shape: Shape, value: Vec<f64>) -> Var {
        debug_assert_eq!(shape.len(), value.len());
        self.nodes.push(Node { op, shape, value });
        Var(self.nodes.len() - 1)
    }

    /// A leaf that does not receive a reported gradient.
    pub fn constant(&mut self, shape: Shape, value: Vec<f64>) -> Result<Var> {
        if shape.len() != value.len() {
            return Err(Error::ShapeMismatch {
                op: "constant",
                detail: format!("shape {shape} holds {} values, got {}", shape.len(), value.len()),
            });
        }
        Ok(self.push(Op::Leaf, shape, value))
    }

    pub fn constant_scalar(&mut self, value: f64) -> Var {
        self.push(Op::Leaf, Shape::scalar(), vec![value])
    }

    pub fn constant_vector(&mut self, value: &[f64]) -> Var {
        self.push(Op::Leaf, Shape::vector(value.len()), value.to_vec())
    }

    /// A leaf bound to `param`; its gradient is reported under `param.name`.
    pub fn parameter(&mut self, param: &Parameter) -> Var {
        let v = self.push(Op::Leaf, param.shape.clone(), param.value.clone());
        self.params.push((v, param.name.clone()));
        v
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<Shape> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(Error::ShapeMismatch { op, detail: format!("{sa} vs {sb}") });
        }
        Ok(sa.clone())
    }

    fn zip_with(&mut self, op: Op, a: Var, b: Var, name: &'static str, f: fn(f64, f64) -> f64) -> Result<Var> {
        let shape = self.same_shape(name, a, b)?;
        let value = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| f(x, y)).collect();
        Ok(self.push(op, shape, value))
    }

    fn map(&mut self, op: Op, a: Var, f: impl Fn(f64) -> f64) -> Var {
        let shape = self.shape(a).clone();
        let value = self.value(a).iter().map(|&x| f(x)).collect();
        self.push(op, shape, value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(Op::Add(a, b), a, b, "add", |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(Op::Sub(a, b), a, b, "sub", |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(Op::Mul(a, b), a, b, "mul", |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.map(Op::Scale(a, c), a, |x| c * x)
    }

    pub fn matvec(&mut self, m: Var, v: Var) -> Result<Var> {
        let (sm, sv) = (self.shape(m).clone(), self.shape(v).clone());
        let ok = sm.dims().len() == 2 && sv.dims().len() == 1 && sm.dims()[1] == sv.dims()[0];
        if !ok {
            return Err(Error::ShapeMismatch { op: "matvec", detail: format!("matrix {sm} times vector {sv}") });
        }
        let (rows, cols) = (sm.dims()[0], sm.dims()[1]);
        let (mv, vv) = (self.value(m), self.value(v));
        let value = (0..rows).map(|i| (0..cols).map(|j| mv[i * cols + j] * vv[j]).sum()).collect();
        Ok(self.push(Op::MatVec(m, v), Shape::vector(rows), value))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).iter().sum();
        self.push(Op::Sum(a), Shape::scalar(), vec![total])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(Op::Tanh(a), a, f64::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(Op::Sigmoid(a), a, sigmoid)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        self.map(Op::Abs(a), a, f64::abs)
    }

    /// Softmax over a vector.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let shape = self.shape(a).clone();
        if shape.dims().len() != 1 || shape.is_empty() {
            return Err(Error::ShapeMismatch { op: "softmax", detail: format!("expected a non-empty vector, got {shape}") });
        }
        let mut out = vec![0.0; shape.len()];
        softmax_into(self.value(a), &mut out);
        Ok(self.push(Op::Softmax(a), shape, out))
    }

    /// Row `i` of a matrix as a vector.
    pub fn row(&mut self, m: Var, i: usize) -> Result<Var> {
        let sm = self.shape(m).clone();
        if sm.dims().len() != 2 || i >= sm.dims()[0] {
            return Err(Error::ShapeMismatch { op: "row", detail: format!("row {i} of {sm}") });
        }
        let cols = sm.dims()[1];
        let value = self.value(m)[i * cols..(i + 1) * cols].to_vec();
        Ok(self.push(Op::Row(m, i), Shape::vector(cols), value))
    }

    /// Element `i` of a vector (or flat index into any shape) as a scalar.
    pub fn index(&mut self, a: Var, i: usize) -> Result<Var> {
        let sa = self.shape(a).clone();
        if i >= sa.len() {
            return Err(Error::ShapeMismatch { op: "index", detail: format!("index {i} into {sa}") });
        }
        let value = vec![self.value(a)[i]];
        Ok(self.push(Op::Index(a, i), Shape::scalar(), value))
    }

    /// Dot product of two equal-length vectors.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let p = self.mul(a, b)?;
        Ok(self.sum(p))
    }

    /// Reverse sweep from a scalar `output`.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let out_shape = self.shape(output);
        if !out_shape.is_scalar() {
            return Err(Error::NonScalarOutput(out_shape.clone()));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        adj[output.0] = Some(vec![1.0]);

        fn acc(adj: &mut [Option<Vec<f64>>], nodes: &[Node], v: Var, i: usize, g: f64) {
            let slot = adj[v.0].get_or_insert_with(|| vec![0.0; nodes[v.0].value.len()]);
            slot[i] += g;
        }

        for idx in (0..=output.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match node.op {
                Op::Leaf => {
                    adj[idx] = Some(g);
                }
                Op::Add(a, b) => {
                    for (i, &gi) in g.iter().enumerate() {
                        acc(&mut adj, &self.nodes, a, i, gi);
                        acc(&mut adj, &self.nodes, b, i, gi);
                    }
                }
                Op::Sub(a, b) => {
                    for (i, &gi) in g.iter().enumerate() {
                        acc(&mut adj, &self.nodes, a, i, gi);
                        acc(&mut adj, &self.nodes, b, i, -gi);
                    }
                }
                Op::Mul(a, b) => {
                    for (i, &gi) in g.iter().enumerate() {
                        let (va, vb) = (self.nodes[a.0].value[i], self.nodes[b.0].value[i]);
                        acc(&mut adj, &self.nodes, a, i, gi * vb);
                        acc(&mut adj, &self.nodes, b, i, gi * va);
                    }
                }
                Op::Scale(a, c) => {
                    for (i, &gi) in g.iter().enumerate() {
                        acc(&mut adj, &self.nodes, a, i, c * gi);
                    }
                }
                Op::MatVec(m, v) => {
                    let cols = self.nodes[v.0].value.len();
                    for (r, &gr) in g.iter().enumerate() {
                        for c in 0..cols {
                            let (mv, vv) = (self.nodes[m.0].value[r * cols + c], self.nodes[v.0].value[c]);
                            acc(&mut adj, &self.nodes, m, r * cols + c, gr * vv);
                            acc(&mut adj, &self.nodes, v, c, gr * mv);
                        }
                    }
                }
                Op::Sum(a) => {
                    for i in 0..self.nodes[a.0].value.len() {
                        acc(&mut adj, &self.nodes, a, i, g[0]);
                    }
                }
                Op::Tanh(a) => {
                    for (i, &gi) in g.iter().enumerate() {
                        let t = node.value[i];
                        acc(&mut adj, &self.nodes, a, i, gi * (1.0 - t * t));
                    }
                }
                Op::Sigmoid(a) => {
                    for (i, &gi) in g.iter().enumerate() {
                        let y = node.value[i];
                        acc(&mut adj, &self.nodes, a, i, gi * y * (1.0 - y));
                    }
                }
                Op::Softmax(a) => {
                    let s = &node.value;
                    let inner: f64 = s.iter().zip(&g).map(|(si, gi)| si * gi).sum();
                    for i in 0..s.len() {
                        acc(&mut adj, &self.nodes, a, i, s[i] * (g[i] - inner));
                    }
                }
                Op::Abs(a) => {
                    for (i, &gi) in g.iter().enumerate() {
                        let x = self.nodes[a.0].value[i];
                        let sign = if x > 0.0 {
                            1.0
                        } else if x < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        acc(&mut adj, &self.nodes, a, i, gi * sign);
                    }
                }
                Op::Row(m, r) => {
                    let cols = g.len();
                    for (c, &gc) in g.iter().enumerate() {
                        acc(&mut adj, &self.nodes, m, r * cols + c, gc);
                    }
                }
                Op::Index(a, i) => acc(&mut adj, &self.nodes, a, i, g[0]),
            }
        }

        let mut by_param: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (v, name) in &self.params {
            let g = adj.get(v.0).cloned().flatten().unwrap_or_else(|| vec![0.0; self.nodes[v.0].value.len()]);
            match by_param.get_mut(name) {
                Some(existing) => existing.iter_mut().zip(&g).for_each(|(e, x)| *e += x),
                None => {
                    by_param.insert(name.clone(), g);
                }
            }
        }
        Ok(Gradients { by_param })
    }
}

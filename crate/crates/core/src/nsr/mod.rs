//! The neural status register: a differentiable comparison unit.
//!
//! Each of the `r` redundant units selects two operands from the input with a
//! softmax over learned logits, takes their difference `d`, and activates a
//! relaxed sign bit `tanh(λd)` and zero bit `1 - 2 tanh(λd)^2`. All weighted
//! bits and per-unit biases are summed into one logit `z`, and the layer
//! emits `y = sigmoid(z)` together with its complement `1 - y`.

mod hand;

pub use hand::{NsrWeightRow, NSR_TABLE, NSR_TABLE_AS_PRINTED, SELECT_LOGIT};

use std::sync::{Arc, Mutex};

use crate::autodiff::{sigmoid, softmax_into, Model, Parameter, RngStream, Tape, Var};
use crate::error::{Error, Result, Shape};
use crate::model::ScalarModel;

/// Relaxed sign bit.
pub fn sign_bit_hat(x: f64, lambda: f64) -> f64 {
    (lambda * x).tanh()
}

/// Relaxed zero bit.
pub fn zero_bit_hat(x: f64, lambda: f64) -> f64 {
    let t = (lambda * x).tanh();
    1.0 - 2.0 * t * t
}

/// Derivative of [`sign_bit_hat`] with respect to `x`.
pub fn sign_bit_hat_grad(x: f64, lambda: f64) -> f64 {
    let t = (lambda * x).tanh();
    lambda * (1.0 - t * t)
}

/// Derivative of [`zero_bit_hat`] with respect to `x`.
pub fn zero_bit_hat_grad(x: f64, lambda: f64) -> f64 {
    let t = (lambda * x).tanh();
    -4.0 * lambda * t * (1.0 - t * t)
}

/// The pair of bit activations used by a forward pass.
///
/// Only the forward path is pluggable; gradients always use the tanh
/// relaxations above.
#[derive(Clone, Copy)]
pub struct BitRelaxation {
    pub sign: fn(f64, f64) -> f64,
    pub zero: fn(f64, f64) -> f64,
}

impl BitRelaxation {
    pub const TANH: BitRelaxation = BitRelaxation { sign: sign_bit_hat, zero: zero_bit_hat };
}

/// Learnable state of an NSR layer with `r` redundant units over `n` inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct NsrParams {
    /// r×n logits selecting the first operand.
    pub select_first: Parameter,
    /// r×n logits selecting the second operand.
    pub select_second: Parameter,
    pub w_sign: Parameter,
    pub w_zero: Parameter,
    pub bias: Parameter,
    /// Pre-activation scale for both bits. Fixed for a run, never trained.
    pub lambda: f64,
    cache: SelectionCache,
}

/// Intermediate values of one unit in one forward pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitTrace {
    pub o1: f64,
    pub o2: f64,
    pub d: f64,
    /// `tanh(λd)`, kept for the backward pass.
    pub t: f64,
    pub bplus: f64,
    pub bzero: f64,
}

/// Softmax of both selection matrices, tagged with the logits it came from.
#[derive(Debug, PartialEq)]
pub struct Selection {
    logits: Vec<f64>,
    /// Softmax of `select_first`, r×n row-major.
    pub p1: Vec<f64>,
    /// Softmax of `select_second`, r×n row-major.
    pub p2: Vec<f64>,
}

impl Selection {
    fn compute(first: &Parameter, second: &Parameter) -> Self {
        let (r, n) = (first.shape.dims()[0], first.shape.dims()[1]);
        let mut p1 = vec![0.0; r * n];
        let mut p2 = vec![0.0; r * n];
        for j in 0..r {
            softmax_into(first.row(j), &mut p1[j * n..(j + 1) * n]);
            softmax_into(second.row(j), &mut p2[j * n..(j + 1) * n]);
        }
        let logits = first.value.iter().chain(&second.value).copied().collect();
        Selection { logits, p1, p2 }
    }

    fn matches(&self, first: &Parameter, second: &Parameter) -> bool {
        let (a, b) = self.logits.split_at(first.value.len());
        a == first.value.as_slice() && b == second.value.as_slice()
    }
}

/// The selection softmax does not depend on the input, so it is computed
/// once per parameter state and reused until the logits change.
#[derive(Debug, Default)]
struct SelectionCache(Mutex<Option<Arc<Selection>>>);

impl Clone for SelectionCache {
    fn clone(&self) -> Self {
        SelectionCache::default()
    }
}

impl PartialEq for SelectionCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct NsrTrace {
    pub units: Vec<UnitTrace>,
    pub selection: Arc<Selection>,
    pub z: f64,
    pub y: f64,
    pub ybar: f64,
}

/// Partial derivatives of `y` for a single forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct NsrGradients {
    pub select_first: Vec<f64>,
    pub select_second: Vec<f64>,
    pub w_sign: Vec<f64>,
    pub w_zero: Vec<f64>,
    pub bias: Vec<f64>,
    pub o1: Vec<f64>,
    pub o2: Vec<f64>,
    pub input: Vec<f64>,
}

impl NsrParams {
    fn validate(r: usize, n: usize, lambda: f64) -> Result<()> {
        if r == 0 || n == 0 {
            return Err(Error::InvalidConfig(format!("NSR needs r >= 1 and n >= 1, got r={r}, n={n}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(())
    }

    /// Builds a layer from explicit values; shapes are checked.
    pub fn from_values(
        n: usize,
        select_first: Vec<f64>,
        select_second: Vec<f64>,
        w_sign: Vec<f64>,
        w_zero: Vec<f64>,
        bias: Vec<f64>,
        lambda: f64,
    ) -> Result<Self> {
        let r = w_sign.len();
        Self::validate(r, n, lambda)?;
        let ok = select_first.len() == r * n
            && select_second.len() == r * n
            && w_zero.len() == r
            && bias.len() == r;
        if !ok {
            return Err(Error::ShapeMismatch {
                op: "nsr_params",
                detail: format!(
                    "r={r}, n={n}: selection {}/{} entries, w_zero {}, bias {}",
                    select_first.len(),
                    select_second.len(),
                    w_zero.len(),
                    bias.len()
                ),
            });
        }
        let all_finite = [&select_first, &select_second, &w_sign, &w_zero, &bias]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()));
        if !all_finite {
            return Err(Error::InvalidConfig("NSR parameters must be finite".into()));
        }
        Ok(NsrParams {
            select_first: Parameter::new("select_first", Shape::matrix(r, n), select_first),
            select_second: Parameter::new("select_second", Shape::matrix(r, n), select_second),
            w_sign: Parameter::new("w_sign", Shape::vector(r), w_sign),
            w_zero: Parameter::new("w_zero", Shape::vector(r), w_zero),
            bias: Parameter::new("bias", Shape::vector(r), bias),
            lambda,
            cache: SelectionCache::default(),
        })
    }

    /// Every learnable drawn i.i.d. from a standard normal.
    pub fn init(n: usize, r: usize, lambda: f64, rng: &mut RngStream) -> Result<Self> {
        Self::validate(r, n, lambda)?;
        let mut draw = |k: usize| (0..k).map(|_| rng.normal()).collect::<Vec<f64>>();
        let select_first = draw(r * n);
        let select_second = draw(r * n);
        let w_sign = draw(r);
        let w_zero = draw(r);
        let bias = draw(r);
        Self::from_values(n, select_first, select_second, w_sign, w_zero, bias, lambda)
    }

    /// Single-unit layer over `n` inputs whose operand selection is
    /// effectively one-hot on `first` and `second`.
    pub fn comparator(n: usize, first: usize, second: usize, w_sign: f64, w_zero: f64, bias: f64, lambda: f64) -> Result<Self> {
        if first >= n || second >= n {
            return Err(Error::InvalidConfig(format!("operand index out of range for n={n}")));
        }
        let mut v1 = vec![0.0; n];
        let mut v2 = vec![0.0; n];
        v1[first] = SELECT_LOGIT;
        v2[second] = SELECT_LOGIT;
        Self::from_values(n, v1, v2, vec![w_sign], vec![w_zero], vec![bias], lambda)
    }

    pub fn redundancy(&self) -> usize {
        self.w_sign.len()
    }

    pub fn input_dim(&self) -> usize {
        self.select_first.shape.dims()[1]
    }

    pub fn forward(&self, x: &[f64]) -> Result<NsrTrace> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x, None))
    }

    /// Forward pass with substitute bit activations.
    pub fn forward_with(&self, x: &[f64], bits: BitRelaxation) -> Result<NsrTrace> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x, Some(bits)))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        let n = self.input_dim();
        if x.len() != n {
            return Err(Error::ShapeMismatch { op: "nsr_forward", detail: format!("expected {n} inputs, got {}", x.len()) });
        }
        Ok(())
    }

    /// Softmax of the selection logits at the current parameter values.
    pub fn selection(&self) -> Arc<Selection> {
        let mut slot = self.cache.0.lock().unwrap_or_else(|e| e.into_inner());
        match slot.as_ref() {
            Some(sel) if sel.matches(&self.select_first, &self.select_second) => Arc::clone(sel),
            _ => {
                let sel = Arc::new(Selection::compute(&self.select_first, &self.select_second));
                *slot = Some(Arc::clone(&sel));
                sel
            }
        }
    }

    fn forward_unchecked(&self, x: &[f64], bits: Option<BitRelaxation>) -> NsrTrace {
        let (r, n) = (self.redundancy(), self.input_dim());
        let selection = self.selection();
        let mut units = Vec::with_capacity(r);
        let mut z = 0.0;
        for j in 0..r {
            let rows = j * n..(j + 1) * n;
            let o1: f64 = selection.p1[rows.clone()].iter().zip(x).map(|(p, xi)| p * xi).sum();
            let o2: f64 = selection.p2[rows].iter().zip(x).map(|(p, xi)| p * xi).sum();
            let d = o1 - o2;
            let t = (self.lambda * d).tanh();
            let (bplus, bzero) = match bits {
                None => (t, 1.0 - 2.0 * t * t),
                Some(b) => ((b.sign)(d, self.lambda), (b.zero)(d, self.lambda)),
            };
            units.push(UnitTrace { o1, o2, d, t, bplus, bzero });
            z += self.w_sign.value[j] * bplus + self.w_zero.value[j] * bzero + self.bias.value[j];
        }
        let y = sigmoid(z);
        NsrTrace { units, selection, z, y, ybar: 1.0 - y }
    }

    /// Accumulates `upstream * ∂y/∂θ` into the five slices and
    /// `upstream * ∂y/∂x` into `dx`.
    #[allow(clippy::too_many_arguments)]
    fn backprop(
        &self,
        x: &[f64],
        trace: &NsrTrace,
        upstream: f64,
        g_first: &mut [f64],
        g_second: &mut [f64],
        g_sign: &mut [f64],
        g_zero: &mut [f64],
        g_bias: &mut [f64],
        dx: &mut [f64],
        mut d_o1: Option<&mut [f64]>,
    ) {
        let n = self.input_dim();
        let dz = upstream * trace.y * trace.ybar;
        let sel = &trace.selection;
        for (j, u) in trace.units.iter().enumerate() {
            g_bias[j] += dz;
            g_sign[j] += dz * u.bplus;
            g_zero[j] += dz * u.bzero;
            let slope = self.lambda * (1.0 - u.t * u.t);
            let dd = dz * slope * (self.w_sign.value[j] - 4.0 * u.t * self.w_zero.value[j]);
            if let Some(buf) = d_o1.as_deref_mut() {
                buf[j] += dd;
            }
            // o1 = p1·x and o2 = p2·x; softmax Jacobian gives p_k (x_k - o).
            for k in 0..n {
                let (p1, p2) = (sel.p1[j * n + k], sel.p2[j * n + k]);
                g_first[j * n + k] += dd * p1 * (x[k] - u.o1);
                g_second[j * n + k] -= dd * p2 * (x[k] - u.o2);
                dx[k] += dd * (p1 - p2);
            }
        }
    }

    /// Closed-form partials of `y` for one forward pass.
    pub fn gradients(&self, x: &[f64], trace: &NsrTrace) -> NsrGradients {
        let (r, n) = (self.redundancy(), self.input_dim());
        let mut g = NsrGradients {
            select_first: vec![0.0; r * n],
            select_second: vec![0.0; r * n],
            w_sign: vec![0.0; r],
            w_zero: vec![0.0; r],
            bias: vec![0.0; r],
            o1: vec![0.0; r],
            o2: vec![0.0; r],
            input: vec![0.0; n],
        };
        self.backprop(
            x,
            trace,
            1.0,
            &mut g.select_first,
            &mut g.select_second,
            &mut g.w_sign,
            &mut g.w_zero,
            &mut g.bias,
            &mut g.input,
            Some(&mut g.o1),
        );
        g.o2 = g.o1.iter().map(|v| -v).collect();
        g
    }

    /// Records the forward pass on `tape`, returning `(y, ybar)`.
    pub fn forward_on_tape(&self, tape: &mut Tape, x: Var) -> Result<(Var, Var)> {
        let n = self.input_dim();
        if tape.shape(x) != &Shape::vector(n) {
            return Err(Error::ShapeMismatch { op: "nsr_forward", detail: format!("expected {n} inputs, got {}", tape.shape(x)) });
        }
        let v1 = tape.parameter(&self.select_first);
        let v2 = tape.parameter(&self.select_second);
        let ws = tape.parameter(&self.w_sign);
        let wz = tape.parameter(&self.w_zero);
        let b = tape.parameter(&self.bias);
        let one = tape.constant_scalar(1.0);
        let mut terms = Vec::new();
        for j in 0..self.redundancy() {
            let l1 = tape.row(v1, j)?;
            let l2 = tape.row(v2, j)?;
            let p1 = tape.softmax(l1)?;
            let p2 = tape.softmax(l2)?;
            let o1 = tape.dot(p1, x)?;
            let o2 = tape.dot(p2, x)?;
            let d = tape.sub(o1, o2)?;
            let scaled = tape.scale(d, self.lambda);
            let bplus = tape.tanh(scaled);
            let sq = tape.mul(bplus, bplus)?;
            let twice = tape.scale(sq, 2.0);
            let bzero = tape.sub(one, twice)?;
            let wsj = tape.index(ws, j)?;
            let wzj = tape.index(wz, j)?;
            let bj = tape.index(b, j)?;
            let a = tape.mul(wsj, bplus)?;
            let c = tape.mul(wzj, bzero)?;
            let ac = tape.add(a, c)?;
            terms.push(tape.add(ac, bj)?);
        }
        let mut z = terms[0];
        for &t in &terms[1..] {
            z = tape.add(z, t)?;
        }
        let y = tape.sigmoid(z);
        let ybar = tape.sub(one, y)?;
        Ok((y, ybar))
    }
}

impl Model for NsrParams {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.select_first, &self.select_second, &self.w_sign, &self.w_zero, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.select_first, &mut self.select_second, &mut self.w_sign, &mut self.w_zero, &mut self.bias]
    }
}

impl ScalarModel for NsrParams {
    type Trace = NsrTrace;

    fn input_dim(&self) -> usize {
        NsrParams::input_dim(self)
    }

    fn forward(&self, x: &[f64]) -> (f64, NsrTrace) {
        let trace = self.forward_unchecked(x, None);
        (trace.y, trace)
    }

    fn backward(&self, x: &[f64], trace: &NsrTrace, upstream: f64, grads: &mut [Vec<f64>], dx: &mut [f64]) {
        let [g0, g1, g2, g3, g4] = grads else {
            panic!("NSR gradient buffer must hold five tensors");
        };
        self.backprop(x, trace, upstream, g0, g1, g2, g3, g4, dx, None);
    }
}

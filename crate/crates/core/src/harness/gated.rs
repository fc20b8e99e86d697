use crate::autodiff::{Model, Parameter, RngStream};
use crate::error::{Error, Result, Shape};
use crate::model::ScalarModel;
use crate::nsr::{NsrParams, NsrTrace};

/// `y·(a1·x + c1) + (1-y)·(a2·x + c2)` with `y` an NSR over the same inputs.
///
/// Branch weights are kept in `[-1, 1]` after every optimizer step, so each
/// branch can only add and subtract its inputs; the offsets are free.
#[derive(Clone, Debug, PartialEq)]
pub struct GatedPiecewise {
    pub gate: NsrParams,
    pub branch_first: Parameter,
    pub offset_first: Parameter,
    pub branch_second: Parameter,
    pub offset_second: Parameter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GatedTrace {
    pub gate: NsrTrace,
    pub first: f64,
    pub second: f64,
}

fn affine(a: &[f64], c: f64, x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + c
}

impl GatedPiecewise {
    /// NSR gate drawn as usual; branch weights uniform in `[-0.5, 0.5]`,
    /// offsets zero.
    pub fn init(n: usize, r: usize, lambda: f64, rng: &mut RngStream) -> Result<Self> {
        let gate = NsrParams::init(n, r, lambda, rng)?;
        let mut draw = || (0..n).map(|_| rng.uniform() - 0.5).collect::<Vec<f64>>();
        let (a1, a2) = (draw(), draw());
        Self::from_parts(gate, a1, 0.0, a2, 0.0)
    }

    pub fn from_parts(gate: NsrParams, a1: Vec<f64>, c1: f64, a2: Vec<f64>, c2: f64) -> Result<Self> {
        let n = gate.input_dim();
        if a1.len() != n || a2.len() != n {
            return Err(Error::ShapeMismatch {
                op: "gated_piecewise",
                detail: format!("gate takes {n} inputs, branches have {} and {}", a1.len(), a2.len()),
            });
        }
        Ok(GatedPiecewise {
            gate,
            branch_first: Parameter::new("branch_first", Shape::vector(n), a1),
            offset_first: Parameter::new("offset_first", Shape::vector(1), vec![c1]),
            branch_second: Parameter::new("branch_second", Shape::vector(n), a2),
            offset_second: Parameter::new("offset_second", Shape::vector(1), vec![c2]),
        })
    }

    pub fn branches(&self, x: &[f64]) -> (f64, f64) {
        (
            affine(&self.branch_first.value, self.offset_first.value[0], x),
            affine(&self.branch_second.value, self.offset_second.value[0], x),
        )
    }
}

impl Model for GatedPiecewise {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut v = self.gate.parameters();
        v.extend([&self.branch_first, &self.offset_first, &self.branch_second, &self.offset_second]);
        v
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = self.gate.parameters_mut();
        v.extend([&mut self.branch_first, &mut self.offset_first, &mut self.branch_second, &mut self.offset_second]);
        v
    }

    fn after_step(&mut self) {
        for a in self.branch_first.value.iter_mut().chain(self.branch_second.value.iter_mut()) {
            *a = a.clamp(-1.0, 1.0);
        }
    }
}

impl ScalarModel for GatedPiecewise {
    type Trace = GatedTrace;

    fn input_dim(&self) -> usize {
        self.gate.input_dim()
    }

    fn forward(&self, x: &[f64]) -> (f64, GatedTrace) {
        let (y, gate) = ScalarModel::forward(&self.gate, x);
        let (first, second) = self.branches(x);
        (y * first + (1.0 - y) * second, GatedTrace { gate, first, second })
    }

    fn backward(&self, x: &[f64], trace: &GatedTrace, upstream: f64, grads: &mut [Vec<f64>], dx: &mut [f64]) {
        let (gate_grads, rest) = grads.split_at_mut(5);
        let [g_a1, g_c1, g_a2, g_c2] = rest else {
            panic!("gated model gradient buffer must hold nine tensors");
        };
        let y = trace.gate.y;
        self.gate.backward(x, &trace.gate, upstream * (trace.first - trace.second), gate_grads, dx);
        let (u1, u2) = (upstream * y, upstream * (1.0 - y));
        g_c1[0] += u1;
        g_c2[0] += u2;
        for k in 0..x.len() {
            g_a1[k] += u1 * x[k];
            g_a2[k] += u2 * x[k];
            dx[k] += u1 * self.branch_first.value[k] + u2 * self.branch_second.value[k];
        }
    }
}

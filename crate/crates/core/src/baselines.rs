//! One-hidden-layer sigmoid MLP used as the comparison baseline.

use crate::autodiff::{sigmoid, Model, Parameter, RngStream, Tape, Var};
use crate::error::{Error, Result, Shape};
use crate::model::ScalarModel;
use crate::tasks::ComparisonOp;

pub const HIDDEN: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputActivation {
    /// Classifier / gate output in (0, 1).
    Sigmoid,
    /// Regression output.
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    /// hidden×n
    pub w_in: Parameter,
    pub b_hidden: Parameter,
    /// 1×hidden
    pub w_out: Parameter,
    pub b_out: Parameter,
    pub output: OutputActivation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpTrace {
    pub hidden: Vec<f64>,
    pub y: f64,
}

impl MlpParams {
    pub fn zeros(n: usize, hidden: usize, output: OutputActivation) -> Self {
        MlpParams {
            w_in: Parameter::zeros("w_in", Shape::matrix(hidden, n)),
            b_hidden: Parameter::zeros("b_hidden", Shape::vector(hidden)),
            w_out: Parameter::zeros("w_out", Shape::matrix(1, hidden)),
            b_out: Parameter::zeros("b_out", Shape::vector(1)),
            output,
        }
    }

    /// Uniform in ±1/sqrt(fan_in) for every weight and bias.
    pub fn init(n: usize, hidden: usize, output: OutputActivation, rng: &mut RngStream) -> Result<Self> {
        if n == 0 || hidden == 0 {
            return Err(Error::InvalidConfig(format!("MLP needs n >= 1 and hidden >= 1, got n={n}, hidden={hidden}")));
        }
        let mut m = Self::zeros(n, hidden, output);
        let a_in = 1.0 / (n as f64).sqrt();
        let a_out = 1.0 / (hidden as f64).sqrt();
        let mut fill = |p: &mut Parameter, a: f64| p.value.iter_mut().for_each(|v| *v = a * (2.0 * rng.uniform() - 1.0));
        fill(&mut m.w_in, a_in);
        fill(&mut m.b_hidden, a_in);
        fill(&mut m.w_out, a_out);
        fill(&mut m.b_out, a_out);
        Ok(m)
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_in.shape.dims()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.w_in.shape.dims()[1]
    }

    pub fn forward(&self, x: &[f64]) -> Result<MlpTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                op: "mlp_forward",
                detail: format!("expected {} inputs, got {}", self.input_dim(), x.len()),
            });
        }
        Ok(self.forward_unchecked(x))
    }

    fn forward_unchecked(&self, x: &[f64]) -> MlpTrace {
        let h = self.hidden_dim();
        let mut hidden = vec![0.0; h];
        let mut out = self.b_out.value[0];
        for (j, hj) in hidden.iter_mut().enumerate() {
            let a: f64 = self.w_in.row(j).iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.b_hidden.value[j];
            *hj = sigmoid(a);
            out += self.w_out.value[j] * *hj;
        }
        let y = match self.output {
            OutputActivation::Sigmoid => sigmoid(out),
            OutputActivation::Linear => out,
        };
        MlpTrace { hidden, y }
    }

    pub fn forward_on_tape(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w_in = tape.parameter(&self.w_in);
        let b_hidden = tape.parameter(&self.b_hidden);
        let w_out = tape.parameter(&self.w_out);
        let b_out = tape.parameter(&self.b_out);
        let a = tape.matvec(w_in, x)?;
        let a = tape.add(a, b_hidden)?;
        let h = tape.sigmoid(a);
        let o = tape.matvec(w_out, h)?;
        let o = tape.add(o, b_out)?;
        let o = match self.output {
            OutputActivation::Sigmoid => tape.sigmoid(o),
            OutputActivation::Linear => o,
        };
        tape.index(o, 0)
    }
}

impl Model for MlpParams {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.w_in, &self.b_hidden, &self.w_out, &self.b_out]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.w_in, &mut self.b_hidden, &mut self.w_out, &mut self.b_out]
    }
}

impl ScalarModel for MlpParams {
    type Trace = MlpTrace;

    fn input_dim(&self) -> usize {
        MlpParams::input_dim(self)
    }

    fn forward(&self, x: &[f64]) -> (f64, MlpTrace) {
        let t = self.forward_unchecked(x);
        (t.y, t)
    }

    fn backward(&self, x: &[f64], trace: &MlpTrace, upstream: f64, grads: &mut [Vec<f64>], dx: &mut [f64]) {
        let [g_win, g_bh, g_wout, g_bout] = grads else {
            panic!("MLP gradient buffer must hold four tensors");
        };
        let n = x.len();
        let d_out = match self.output {
            OutputActivation::Sigmoid => upstream * trace.y * (1.0 - trace.y),
            OutputActivation::Linear => upstream,
        };
        g_bout[0] += d_out;
        for (j, &hj) in trace.hidden.iter().enumerate() {
            g_wout[j] += d_out * hj;
            let da = d_out * self.w_out.value[j] * hj * (1.0 - hj);
            g_bh[j] += da;
            for k in 0..n {
                g_win[j * n + k] += da * x[k];
                dx[k] += da * self.w_in.value[j * n + k];
            }
        }
    }
}

/// Hand weights for a two-hidden-unit comparator.
///
/// `input_to_hidden[i][j]` is the weight from input `i` to hidden unit `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpWeightRow {
    pub op: ComparisonOp,
    pub input_to_hidden: [[f64; 2]; 2],
    pub hidden_bias: [f64; 2],
    pub hidden_to_out: [f64; 2],
    pub out_bias: f64,
}

const fn mrow(op: ComparisonOp, v: [f64; 4], hb: [f64; 2], ho: [f64; 2], ob: f64) -> MlpWeightRow {
    MlpWeightRow { op, input_to_hidden: [[v[0], v[1]], [v[2], v[3]]], hidden_bias: hb, hidden_to_out: ho, out_bias: ob }
}

/// Published MLP weight table, verbatim. The `<=` row has first hidden bias
/// +50, which makes its first unit fire on `x1 >= x2` and the network
/// compute `x1 < x2`; see [`MLP_TABLE`].
pub const MLP_TABLE_AS_PRINTED: [MlpWeightRow; 6] = [
    mrow(ComparisonOp::Gt, [100.0, 0.0, -100.0, 0.0], [-50.0, -50.0], [100.0, 0.0], -50.0),
    mrow(ComparisonOp::Le, [100.0, 0.0, -100.0, 0.0], [50.0, -50.0], [-100.0, 0.0], 50.0),
    mrow(ComparisonOp::Lt, [-100.0, 0.0, 100.0, 0.0], [-50.0, -50.0], [100.0, 0.0], -50.0),
    mrow(ComparisonOp::Ge, [-100.0, 0.0, 100.0, 0.0], [-50.0, -50.0], [-100.0, 0.0], 50.0),
    mrow(ComparisonOp::Eq, [100.0, -100.0, -100.0, 100.0], [-50.0, -50.0], [-100.0, -100.0], 50.0),
    mrow(ComparisonOp::Ne, [100.0, -100.0, -100.0, 100.0], [-50.0, -50.0], [100.0, 100.0], -50.0),
];

/// Working table: the printed one with the `<=` row's first hidden bias set to -50.
pub const MLP_TABLE: [MlpWeightRow; 6] = [
    mrow(ComparisonOp::Gt, [100.0, 0.0, -100.0, 0.0], [-50.0, -50.0], [100.0, 0.0], -50.0),
    mrow(ComparisonOp::Le, [100.0, 0.0, -100.0, 0.0], [-50.0, -50.0], [-100.0, 0.0], 50.0),
    mrow(ComparisonOp::Lt, [-100.0, 0.0, 100.0, 0.0], [-50.0, -50.0], [100.0, 0.0], -50.0),
    mrow(ComparisonOp::Ge, [-100.0, 0.0, 100.0, 0.0], [-50.0, -50.0], [-100.0, 0.0], 50.0),
    mrow(ComparisonOp::Eq, [100.0, -100.0, -100.0, 100.0], [-50.0, -50.0], [-100.0, -100.0], 50.0),
    mrow(ComparisonOp::Ne, [100.0, -100.0, -100.0, 100.0], [-50.0, -50.0], [100.0, 100.0], -50.0),
];

impl MlpWeightRow {
    pub fn for_op(op: ComparisonOp) -> MlpWeightRow {
        *MLP_TABLE.iter().find(|r| r.op == op).expect("every op has a row")
    }

    /// Installs the row into the first two hidden units of a `hidden`-wide
    /// sigmoid MLP; the remaining units have zero weights in and out.
    pub fn build(&self, hidden: usize) -> MlpParams {
        assert!(hidden >= 2, "hand weights need at least two hidden units");
        let mut m = MlpParams::zeros(2, hidden, OutputActivation::Sigmoid);
        for j in 0..2 {
            for i in 0..2 {
                m.w_in.value[j * 2 + i] = self.input_to_hidden[i][j];
            }
            m.b_hidden.value[j] = self.hidden_bias[j];
            m.w_out.value[j] = self.hidden_to_out[j];
        }
        m.b_out.value[0] = self.out_bias;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::GradBuffer;

    #[test]
    fn eighty_one_parameters_for_two_inputs() {
        let m = MlpParams::init(2, HIDDEN, OutputActivation::Sigmoid, &mut RngStream::new(0)).unwrap();
        assert_eq!(m.parameter_count(), 81);
    }

    #[test]
    fn all_zero_weights_give_half() {
        let m = MlpParams::zeros(2, HIDDEN, OutputActivation::Sigmoid);
        assert_eq!(m.forward(&[3.0, -4.0]).unwrap().y, 0.5);
    }

    #[test]
    fn greater_than_row() {
        let m = MlpWeightRow::for_op(ComparisonOp::Gt).build(HIDDEN);
        assert!(m.forward(&[7.0, 2.0]).unwrap().y > 0.99);
        assert!(m.forward(&[2.0, 7.0]).unwrap().y < 0.01);
    }

    #[test]
    fn printed_le_row_computes_lt() {
        let m = MLP_TABLE_AS_PRINTED[1].build(2);
        for a in -5..=5 {
            for b in -5..=5 {
                let pred = m.forward(&[a as f64, b as f64]).unwrap().y > 0.5;
                assert_eq!(pred, a < b);
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let m = MlpParams::zeros(2, 3, OutputActivation::Linear);
        assert!(m.forward(&[1.0]).is_err());
    }

    #[test]
    fn tape_route_matches_manual_backward() {
        for output in [OutputActivation::Sigmoid, OutputActivation::Linear] {
            let m = MlpParams::init(3, 5, output, &mut RngStream::new(2)).unwrap();
            let x = [0.4, -1.2, 2.0];
            let (y, trace) = ScalarModel::forward(&m, &x);
            let mut grads = GradBuffer::for_model(&m);
            let mut dx = vec![0.0; 3];
            m.backward(&x, &trace, 1.0, &mut grads.0, &mut dx);

            let mut tape = Tape::new();
            let xv = tape.constant_vector(&x);
            let out = m.forward_on_tape(&mut tape, xv).unwrap();
            assert!((tape.scalar(out) - y).abs() < 1e-15);
            let tg = tape.backward(out).unwrap();
            for (p, g) in m.parameters().iter().zip(&grads.0) {
                let t = tg.get(&p.name).unwrap();
                assert!(t.iter().zip(g).all(|(a, b)| (a - b).abs() < 1e-14), "{}", p.name);
            }
        }
    }
}

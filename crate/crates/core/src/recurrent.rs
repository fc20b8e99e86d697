//! Recurrent minimum and counting cells built around a comparison gate.
//!
//! The gate is any [`ScalarModel`] on two inputs with output in (0, 1): an
//! NSR for the main model, an MLP for the baseline. Both cells wire the gate
//! identically, so the two variants differ only in the comparison unit.

use crate::autodiff::{GradBuffer, Model, Parameter};
use crate::model::ScalarModel;

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `m' = y·m + (1-y)·x` with `y = gate(m, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinCell<G> {
    pub gate: G,
}

/// `c' = c + gate(x0, x)`; the reference `x0` is the list head.
#[derive(Clone, Debug, PartialEq)]
pub struct CountCell<G> {
    pub gate: G,
}

impl<G: ScalarModel> MinCell<G> {
    pub fn new(gate: G) -> Self {
        assert_eq!(gate.input_dim(), 2, "min cell gate takes (state, input)");
        MinCell { gate }
    }

    pub fn step(&self, m: f64, x: f64) -> f64 {
        let y = self.gate.predict(&[m, x]);
        y * m + (1.0 - y) * x
    }

    /// States `m_0 = list[0], m_1, ..., m_k`.
    pub fn states(&self, list: &[f64]) -> Vec<f64> {
        let Some((&first, rest)) = list.split_first() else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(list.len());
        out.push(first);
        let mut m = first;
        for &x in rest {
            m = self.step(m, x);
            out.push(m);
        }
        out
    }

    /// Final state after folding the whole list. Panics on an empty list.
    pub fn run(&self, list: &[f64]) -> f64 {
        *self.states(list).last().expect("min cell needs a non-empty list")
    }

    /// Folds `list`, then backpropagates `upstream(final)` through every
    /// step into `grads`. Returns the final state.
    pub fn run_backward(&self, list: &[f64], grads: &mut GradBuffer, upstream: impl FnOnce(f64) -> f64) -> f64 {
        let (&first, rest) = list.split_first().expect("min cell needs a non-empty list");
        let mut steps = Vec::with_capacity(rest.len());
        let mut m = first;
        for &x in rest {
            let (y, trace) = self.gate.forward(&[m, x]);
            steps.push((m, x, y, trace));
            m = y * m + (1.0 - y) * x;
        }
        let mut dm = upstream(m);
        let mut dx = [0.0; 2];
        for (m_i, x_i, y, trace) in steps.iter().rev() {
            if dm == 0.0 {
                break;
            }
            dx[0] = 0.0;
            dx[1] = 0.0;
            self.gate.backward(&[*m_i, *x_i], trace, dm * (m_i - x_i), &mut grads.0, &mut dx);
            dm = dm * y + dx[0];
        }
        m
    }

    /// Absolute error of the final state, with its gradient accumulated.
    pub fn mae_backward(&self, list: &[f64], target: f64, grads: &mut GradBuffer) -> f64 {
        let out = self.run_backward(list, grads, |m| sign(m - target));
        (out - target).abs()
    }
}

impl<G: ScalarModel> CountCell<G> {
    pub fn new(gate: G) -> Self {
        assert_eq!(gate.input_dim(), 2, "count cell gate takes (reference, input)");
        CountCell { gate }
    }

    pub fn step(&self, c: f64, x0: f64, x: f64) -> f64 {
        c + self.gate.predict(&[x0, x])
    }

    pub fn run(&self, list: &[f64]) -> f64 {
        let Some((&x0, rest)) = list.split_first() else {
            return 0.0;
        };
        rest.iter().fold(0.0, |c, &x| self.step(c, x0, x))
    }

    pub fn mae_backward(&self, list: &[f64], target: f64, grads: &mut GradBuffer) -> f64 {
        let Some((&x0, rest)) = list.split_first() else {
            return target.abs();
        };
        let steps: Vec<_> = rest.iter().map(|&x| (x, self.gate.forward(&[x0, x]))).collect();
        let count: f64 = steps.iter().map(|(_, (y, _))| y).sum();
        let s = sign(count - target);
        if s != 0.0 {
            let mut dx = [0.0; 2];
            for (x, (_, trace)) in &steps {
                self.gate.backward(&[x0, *x], trace, s, &mut grads.0, &mut dx);
            }
        }
        (count - target).abs()
    }
}

macro_rules! delegate_model {
    ($cell:ident) => {
        impl<G: Model> Model for $cell<G> {
            fn parameters(&self) -> Vec<&Parameter> {
                self.gate.parameters()
            }
            fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
                self.gate.parameters_mut()
            }
            fn after_step(&mut self) {
                self.gate.after_step()
            }
        }
    };
}

delegate_model!(MinCell);
delegate_model!(CountCell);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{finite_diff_check, RngStream};
    use crate::baselines::{MlpParams, OutputActivation};
    use crate::nsr::{NsrParams, NsrWeightRow};
    use crate::tasks::ComparisonOp;

    /// Gate with a fixed output, for wiring checks.
    struct Constant(f64);

    impl Model for Constant {
        fn parameters(&self) -> Vec<&Parameter> {
            Vec::new()
        }
        fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
            Vec::new()
        }
    }

    impl ScalarModel for Constant {
        type Trace = ();
        fn input_dim(&self) -> usize {
            2
        }
        fn forward(&self, _: &[f64]) -> (f64, ()) {
            (self.0, ())
        }
        fn backward(&self, _: &[f64], _: &(), _: f64, _: &mut [Vec<f64>], _: &mut [f64]) {}
    }

    fn perfect_min() -> MinCell<NsrParams> {
        MinCell::new(NsrWeightRow::for_op(ComparisonOp::Lt).build(1.0).unwrap())
    }

    #[test]
    fn perfect_gate_tracks_minimum() {
        assert_eq!(perfect_min().states(&[5.0, 2.0, 7.0]), vec![5.0, 2.0, 2.0]);
    }

    #[test]
    fn half_gate_averages() {
        let cell = MinCell::new(Constant(0.5));
        assert_eq!(cell.step(3.0, 8.0), 5.5);
    }

    #[test]
    fn identical_values_are_fixed_points() {
        for g in [0.0, 0.3, 1.0] {
            let cell = MinCell::new(Constant(g));
            assert_eq!(cell.run(&[-4.0, -4.0, -4.0]), -4.0);
        }
    }

    #[test]
    fn gate_one_keeps_state_gate_zero_tracks_input() {
        assert_eq!(MinCell::new(Constant(1.0)).states(&[1.0, 9.0, -3.0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(MinCell::new(Constant(0.0)).states(&[1.0, 9.0, -3.0]), vec![1.0, 9.0, -3.0]);
    }

    #[test]
    fn perfect_equality_gate_counts() {
        let cell = CountCell::new(NsrWeightRow::for_op(ComparisonOp::Eq).build(1.0).unwrap());
        assert!((cell.run(&[3.0, 3.0, 5.0, 3.0]) - 2.0).abs() < 1e-12);
        assert_eq!(CountCell::new(Constant(0.0)).run(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(cell.run(&[7.0]), 0.0);
    }

    #[test]
    fn random_mlp_min_state_stays_bounded() {
        let mut rng = RngStream::new(4);
        let cell = MinCell::new(MlpParams::init(2, 20, OutputActivation::Sigmoid, &mut rng).unwrap());
        let list: Vec<f64> = (0..51).map(|_| rng.int_inclusive(-1000, 1000) as f64).collect();
        let states = cell.states(&list);
        assert!(states.iter().all(|s| s.is_finite() && (-1000.0..=1000.0).contains(s)));
    }

    #[test]
    fn min_cell_bptt_matches_finite_differences() {
        let mut rng = RngStream::new(21);
        let mut cell = MinCell::new(NsrParams::init(2, 3, 0.5, &mut rng).unwrap());
        let list = [2.0, -1.0, 3.5, 0.5];
        let target = -7.0;
        let report = finite_diff_check(
            &mut cell,
            |c| (c.run(&list) - target).abs(),
            |c| {
                let mut g = GradBuffer::for_model(c);
                c.mae_backward(&list, target, &mut g);
                g.add_into(c);
            },
            1e-5,
            1e-5,
        );
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn count_cell_backward_matches_finite_differences() {
        let mut rng = RngStream::new(8);
        let mut cell = CountCell::new(MlpParams::init(2, 4, OutputActivation::Sigmoid, &mut rng).unwrap());
        let list = [1.0, 1.0, -2.0, 1.0, 4.0];
        let target = 3.0;
        let report = finite_diff_check(
            &mut cell,
            |c| (c.run(&list) - target).abs(),
            |c| {
                let mut g = GradBuffer::for_model(c);
                c.mae_backward(&list, target, &mut g);
                g.add_into(c);
            },
            1e-5,
            1e-5,
        );
        assert!(report.passed(), "{report:?}");
    }
}

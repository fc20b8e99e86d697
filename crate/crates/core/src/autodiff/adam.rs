use super::param::Parameter;
use crate::error::{Error, Result};

/// Adam with bias correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl Adam {
    /// Applies one update to every parameter and zeroes the gradients.
    ///
    /// Gradients are checked before anything is touched, so a non-finite
    /// gradient leaves all parameters unchanged.
    pub fn step(&self, params: &mut [&mut Parameter]) -> Result<()> {
        if let Some(bad) = params.iter().find(|p| p.grad.iter().any(|g| !g.is_finite())) {
            return Err(Error::NonFiniteGradient { parameter: bad.name.clone() });
        }
        for p in params.iter_mut() {
            p.step_count += 1;
            let t = p.step_count as f64;
            let bc1 = 1.0 - self.beta1.powf(t);
            let bc2 = 1.0 - self.beta2.powf(t);
            for i in 0..p.value.len() {
                let g = p.grad[i];
                p.adam_m[i] = self.beta1 * p.adam_m[i] + (1.0 - self.beta1) * g;
                p.adam_v[i] = self.beta2 * p.adam_v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = p.adam_m[i] / bc1;
                let v_hat = p.adam_v[i] / bc2;
                p.value[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            p.zero_grad();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Shape;

    fn scalar(v: f64, g: f64) -> Parameter {
        let mut p = Parameter::new("w", Shape::scalar(), vec![v]);
        p.grad[0] = g;
        p
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = 1, v_hat = 1, update = lr / (1 + eps)
        let mut p = scalar(0.5, 1.0);
        Adam::default().step(&mut [&mut p]).unwrap();
        let expected = 0.5 - 1e-3 / (1.0 + 1e-8);
        assert!((p.value[0] - expected).abs() < 1e-15);
        assert_eq!(p.grad[0], 0.0);
    }

    #[test]
    fn zero_gradient_leaves_values() {
        let mut p = scalar(-2.25, 0.0);
        Adam::default().step(&mut [&mut p]).unwrap();
        assert_eq!(p.value[0], -2.25);
    }

    #[test]
    fn bias_corrected_moment_equals_constant_gradient() {
        let adam = Adam::default();
        let mut p = scalar(0.0, 0.3);
        for t in 1..=2 {
            p.grad[0] = 0.3;
            adam.step(&mut [&mut p]).unwrap();
            let m_hat = p.adam_m[0] / (1.0 - adam.beta1.powi(t));
            assert!((m_hat - 0.3).abs() < 1e-15, "step {t}: {m_hat}");
            assert!(p.adam_m[0].is_finite() && p.adam_v[0].is_finite());
        }
    }

    #[test]
    fn non_finite_gradient_aborts_with_name() {
        let mut ok = scalar(1.0, 0.1);
        let mut bad = scalar(1.0, f64::NAN);
        bad.name = "w_zero".into();
        let err = Adam::default().step(&mut [&mut ok, &mut bad]).unwrap_err();
        assert!(err.to_string().contains("w_zero"));
        assert_eq!(ok.value[0], 1.0);
    }
}

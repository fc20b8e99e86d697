use crate::autodiff::{Adam, GradBuffer, Model};
use crate::error::{Error, Result};
use crate::model::ScalarModel;
use crate::tasks::Dataset;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: Adam,
    pub lambda: f64,
    pub redundancy: usize,
    /// Regression tolerance used at evaluation time.
    pub tolerance: f64,
    pub curve_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 50_000, adam: Adam::default(), lambda: 1.0, redundancy: 10, tolerance: 0.1, curve_every: 100 }
    }
}

impl TrainConfig {
    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_redundancy(mut self, r: usize) -> Self {
        self.redundancy = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.redundancy == 0 {
            return Err(Error::InvalidConfig("redundancy must be >= 1".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.curve_every == 0 {
            return Err(Error::InvalidConfig("curve interval must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(epoch, loss before that epoch's update)` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossCurve {
    pub points: Vec<(usize, f64)>,
}

impl LossCurve {
    pub fn last(&self) -> Option<f64> {
        self.points.last().map(|p| p.1)
    }
}

pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Generic full-batch loop. `epoch_loss` returns the loss at the current
/// parameters and adds its gradient into the buffer. The final epoch is
/// always on the curve.
pub fn train_with<M, F>(model: &mut M, config: &TrainConfig, mut epoch_loss: F) -> Result<LossCurve>
where
    M: Model,
    F: FnMut(&M, &mut GradBuffer) -> f64,
{
    let mut grads = GradBuffer::for_model(model);
    let mut curve = LossCurve::default();
    let every = config.curve_every.max(1);
    for epoch in 0..config.epochs {
        grads.clear();
        let loss = epoch_loss(model, &mut grads);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        if epoch % every == 0 || epoch + 1 == config.epochs {
            curve.points.push((epoch, loss));
        }
        model.zero_grad();
        grads.add_into(model);
        config.adam.step(&mut model.parameters_mut())?;
        model.after_step();
    }
    Ok(curve)
}

/// Mean absolute error over a dataset, with its gradient added into `grads`.
pub fn mae_epoch<M: ScalarModel>(model: &M, data: &Dataset, grads: &mut GradBuffer) -> f64 {
    let inv = 1.0 / data.len() as f64;
    let mut dx = vec![0.0; model.input_dim()];
    let mut total = 0.0;
    for ex in &data.examples {
        let (y, trace) = model.forward(&ex.inputs);
        let err = y - ex.target;
        total += err.abs();
        let s = sign(err);
        if s != 0.0 {
            model.backward(&ex.inputs, &trace, s * inv, &mut grads.0, &mut dx);
        }
    }
    total * inv
}

/// Full-batch MAE with Adam.
pub fn train<M: ScalarModel>(model: &mut M, data: &Dataset, config: &TrainConfig) -> Result<LossCurve> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("cannot train on an empty dataset".into()));
    }
    train_with(model, config, |m, g| mae_epoch(m, data, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::RngStream;
    use crate::baselines::{MlpParams, OutputActivation};
    use crate::nsr::NsrParams;
    use crate::tasks::{comparison_train_set, ComparisonOp};

    #[test]
    fn zero_epochs_leave_model_unchanged() {
        let mut m = NsrParams::init(2, 3, 1.0, &mut RngStream::new(1)).unwrap();
        let before = m.clone();
        let data = comparison_train_set(ComparisonOp::Gt, 1.0).unwrap();
        let curve = train(&mut m, &data, &TrainConfig::default().with_epochs(0)).unwrap();
        assert_eq!(m, before);
        assert!(curve.points.is_empty());
    }

    #[test]
    fn curve_is_sampled_and_ends_on_last_epoch() {
        let mut m = MlpParams::init(2, 4, OutputActivation::Sigmoid, &mut RngStream::new(2)).unwrap();
        let data = comparison_train_set(ComparisonOp::Lt, 1.0).unwrap();
        let cfg = TrainConfig { epochs: 250, ..TrainConfig::default() };
        let curve = train(&mut m, &data, &cfg).unwrap();
        let epochs: Vec<usize> = curve.points.iter().map(|p| p.0).collect();
        assert_eq!(epochs, vec![0, 100, 200, 249]);
        assert!(curve.points[3].1 < curve.points[0].1);
    }

    #[test]
    fn same_seed_same_parameters() {
        let data = comparison_train_set(ComparisonOp::Ge, 1.0).unwrap();
        let run = || {
            let mut m = NsrParams::init(2, 4, 1.0, &mut RngStream::new(33)).unwrap();
            train(&mut m, &data, &TrainConfig::default().with_epochs(50)).unwrap();
            m
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_loss_aborts() {
        let mut m = MlpParams::init(2, 2, OutputActivation::Linear, &mut RngStream::new(3)).unwrap();
        let cfg = TrainConfig::default().with_epochs(10);
        let err = train_with(&mut m, &cfg, |_, _| if true { f64::NAN } else { 0.0 }).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { epoch: 0 }));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig::default().with_epochs(0).validate().is_err());
        assert!(TrainConfig::default().with_lambda(0.0).validate().is_err());
        assert!(TrainConfig { tolerance: 0.0, ..TrainConfig::default() }.validate().is_err());
    }
}

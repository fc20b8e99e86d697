use crate::model::ScalarModel;
use crate::tasks::Dataset;

/// Fraction of examples for which `correct(prediction, target)` holds.
/// NaN for an empty set.
pub fn accuracy_by(data: &Dataset, predict: impl Fn(&[f64]) -> f64, correct: impl Fn(f64, f64) -> bool) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let hits = data.examples.iter().filter(|e| correct(predict(&e.inputs), e.target)).count();
    hits as f64 / data.len() as f64
}

/// Predicts 1 iff the output is strictly above 0.5.
pub fn classify(y: f64) -> f64 {
    if y > 0.5 {
        1.0
    } else {
        0.0
    }
}

pub fn eval_classification<M: ScalarModel>(model: &M, data: &Dataset) -> f64 {
    accuracy_by(data, |x| model.predict(x), |y, t| classify(y) == t)
}

/// Correct when `|prediction - target| <= tol`.
pub fn eval_regression<M: ScalarModel>(model: &M, data: &Dataset, tol: f64) -> f64 {
    accuracy_by(data, |x| model.predict(x), |y, t| (y - t).abs() <= tol)
}

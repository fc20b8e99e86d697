//! Central finite-difference check of analytic gradients.

use super::param::Model;

/// Largest discrepancy found for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub tol: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.max_rel_error < self.tol)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }
}

/// Magnitudes below this are compared absolutely.
pub const ABS_FLOOR: f64 = 1e-8;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if denom < ABS_FLOOR {
        diff
    } else {
        diff / denom
    }
}

/// Compares `grad` (which must leave dF/dθ in every `Parameter::grad`)
/// against central differences of `value` with step `h`.
pub fn finite_diff_check<M, F, G>(model: &mut M, value: F, grad: G, h: f64, tol: f64) -> GradCheckReport
where
    M: Model,
    F: Fn(&M) -> f64,
    G: Fn(&mut M),
{
    assert!(h > 0.0, "finite-difference step must be positive");
    model.zero_grad();
    grad(model);
    let analytic: Vec<Vec<f64>> = model.parameters().iter().map(|p| p.grad.clone()).collect();
    model.zero_grad();

    let mut params = Vec::new();
    let count = analytic.len();
    for pi in 0..count {
        let len = analytic[pi].len();
        let mut check = ParamCheck {
            name: model.parameters()[pi].name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for i in 0..len {
            let orig = model.parameters()[pi].value[i];
            model.parameters_mut()[pi].value[i] = orig + h;
            let plus = value(model);
            model.parameters_mut()[pi].value[i] = orig - h;
            let minus = value(model);
            model.parameters_mut()[pi].value[i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(analytic[pi][i], numeric);
            if err > check.max_rel_error || i == 0 {
                check.max_rel_error = err;
                check.worst_index = i;
                check.analytic = analytic[pi][i];
                check.numeric = numeric;
            }
        }
        params.push(check);
    }
    GradCheckReport { tol, params }
}

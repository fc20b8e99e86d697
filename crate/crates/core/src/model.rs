use crate::autodiff::Model;

/// A differentiable map from an input vector to one scalar.
///
/// Gradient tensors are laid out like [`Model::parameters`]; composites
/// hand sub-slices to their parts.
pub trait ScalarModel: Model {
    type Trace;

    fn input_dim(&self) -> usize;

    /// Input length is the caller's responsibility.
    fn forward(&self, x: &[f64]) -> (f64, Self::Trace);

    /// Adds `upstream * ∂out/∂θ` into `grads` and `upstream * ∂out/∂x` into `dx`.
    fn backward(&self, x: &[f64], trace: &Self::Trace, upstream: f64, grads: &mut [Vec<f64>], dx: &mut [f64]);

    fn predict(&self, x: &[f64]) -> f64 {
        self.forward(x).0
    }
}

use crate::error::Shape;

/// A learnable tensor together with its gradient accumulator and Adam state.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub shape: Shape,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub step_count: u64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, shape: Shape, value: Vec<f64>) -> Self {
        assert_eq!(shape.len(), value.len(), "parameter value does not match its shape");
        let n = value.len();
        Parameter {
            name: name.into(),
            shape,
            value,
            grad: vec![0.0; n],
            adam_m: vec![0.0; n],
            adam_v: vec![0.0; n],
            step_count: 0,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: Shape) -> Self {
        let n = shape.len();
        Self::new(name, shape, vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Row `i` of a matrix-shaped parameter.
    pub fn row(&self, i: usize) -> &[f64] {
        let cols = self.shape.dims()[1];
        &self.value[i * cols..(i + 1) * cols]
    }
}

/// Anything that owns learnable parameters.
pub trait Model {
    fn parameters(&self) -> Vec<&Parameter>;
    fn parameters_mut(&mut self) -> Vec<&mut Parameter>;

    /// Projection applied after every optimizer step.
    fn after_step(&mut self) {}

    fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }
}

/// Gradient scratch space laid out like `Model::parameters()`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradBuffer(pub Vec<Vec<f64>>);

impl GradBuffer {
    pub fn for_model<M: Model + ?Sized>(model: &M) -> Self {
        GradBuffer(model.parameters().iter().map(|p| vec![0.0; p.len()]).collect())
    }

    pub fn clear(&mut self) {
        for g in &mut self.0 {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.0 {
            g.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Adds the buffer into the parameters' `grad` fields.
    pub fn add_into<M: Model + ?Sized>(&self, model: &mut M) {
        for (p, g) in model.parameters_mut().into_iter().zip(&self.0) {
            for (dst, src) in p.grad.iter_mut().zip(g) {
                *dst += src;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }
}

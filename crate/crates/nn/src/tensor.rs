use crate::scalar::Scalar;
use crate::NnError;

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    pub data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn new(shape: Vec<usize>, data: Vec<F>) -> Result<Self, NnError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NnError::Shape(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            data: vec![F::zero(); shape.iter().product()],
            shape: shape.to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape)
    }

    pub fn fill(&mut self, v: F) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn sum_squares(&self) -> F {
        self.data.iter().map(|&x| x * x).sum()
    }

    pub fn cast<G: Scalar>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|x| G::from_f64_lossy(x.to_f64().expect("float converts to f64")))
                .collect(),
        }
    }
}

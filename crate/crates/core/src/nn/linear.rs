use ndarray::{Array2, Axis};
use rand::Rng;

use super::init::{orthogonal, uniform};
use super::tensor::{ParamTensor, Real};
use crate::error::{Error, Result};

/// Fully connected layer `y = x Wᵀ + b` over a row-major batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    /// `[out, in]`
    pub weight: ParamTensor<T>,
    /// `[1, out]`
    pub bias: ParamTensor<T>,
}

impl<T: Real> Linear<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: ParamTensor::zeros(output, input),
            bias: ParamTensor::zeros(1, output),
        }
    }

    pub fn orthogonal<R: Rng + ?Sized>(input: usize, output: usize, gain: f64, rng: &mut R) -> Self {
        Self {
            weight: ParamTensor::from_values(orthogonal(output, input, gain, rng)),
            bias: ParamTensor::zeros(1, output),
        }
    }

    /// Weights and biases uniform in `±1/sqrt(input)`.
    pub fn uniform_fan_in<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        Self {
            weight: ParamTensor::from_values(uniform(output, input, bound, rng)),
            bias: ParamTensor::from_values(uniform(1, output, bound, rng)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.values.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.values.nrows()
    }

    pub fn forward(&self, x: &Array2<T>) -> Result<Array2<T>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "linear layer expects input width {}, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let mut y = x.dot(&self.weight.values.t());
        y += &self.bias.values;
        Ok(y)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Array2<T>, grad_out: &Array2<T>) -> Array2<T> {
        self.weight.grads += &grad_out.t().dot(x);
        self.bias.grads += &grad_out.sum_axis(Axis(0)).insert_axis(Axis(0));
        grad_out.dot(&self.weight.values)
    }
}

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{Array2, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

/// Scalar type of a network: `f64` for gradient checks and oracles, `f32` for training.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("representable")
    }

    fn f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A dense parameter array with its gradient buffer.
///
/// Vectors (biases, log-stds) are stored as `1 x n` matrices so every
/// parameter shares one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor<T> {
    pub values: Array2<T>,
    pub grads: Array2<T>,
}

impl<T: Real> ParamTensor<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_values(Array2::zeros((rows, cols)))
    }

    /// Values are stored in row-major layout.
    pub fn from_values(values: Array2<T>) -> Self {
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        let grads = Array2::zeros(values.raw_dim());
        Self { values, grads }
    }

    pub fn shape(&self) -> [usize; 2] {
        let (r, c) = self.values.dim();
        [r, c]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grads.fill(T::zero());
    }

    /// Replace values, keeping the shape contract.
    pub fn assign(&mut self, values: Array2<T>) -> Result<()> {
        if values.dim() != self.values.dim() {
            return Err(Error::Shape(format!(
                "cannot assign {:?} into parameter of shape {:?}",
                values.dim(),
                self.values.dim()
            )));
        }
        self.values.assign(&values);
        Ok(())
    }

    pub fn check_finite(&self, name: &str) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value in {name}")));
        }
        if self.grads.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient in {name}")));
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ParamTensor<U> {
        ParamTensor {
            values: self.values.mapv(|v| U::of(v.f64())),
            grads: self.grads.mapv(|v| U::of(v.f64())),
        }
    }
}

pub(crate) fn check_finite_array<T: Real>(a: &Array2<T>, what: &str) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite {what}")));
    }
    Ok(())
}

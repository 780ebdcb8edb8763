use ndarray::{Array2, Zip};

use super::tensor::{ParamTensor, Real};
use crate::error::{Error, Result};

/// Adam with bias correction. Moments are allocated on the first step.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<Array2<T>>,
    v: Vec<Array2<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(lr: f64, epsilon: f64) -> Self {
        Self {
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One update over `params` (always passed in the same order), then zero their gradients.
    pub fn step(&mut self, params: &mut [&mut ParamTensor<T>]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Array2::zeros(p.values.raw_dim())).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} tensors, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if p.values.dim() != self.m[i].dim() {
                return Err(Error::Shape(format!("optimizer moment {i} shape mismatch")));
            }
            p.check_finite(&format!("parameter {i}"))?;
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let bc1 = T::of(1.0 - self.beta1.powi(t));
        let bc2 = T::of(1.0 - self.beta2.powi(t));
        let lr = T::of(self.lr);
        let eps = T::of(self.epsilon);
        let one = T::one();
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let p: &mut ParamTensor<T> = p;
            Zip::from(&mut p.values)
                .and(&mut p.grads)
                .and(m)
                .and(v)
                .for_each(|w, g, m, v| {
                    *m = b1 * *m + (one - b1) * *g;
                    *v = b2 * *v + (one - b2) * *g * *g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *w -= lr * m_hat / (v_hat.sqrt() + eps);
                    *g = T::zero();
                });
        }
        Ok(())
    }
}

/// Global L2 norm of all gradients.
pub fn grad_norm<T: Real>(params: &[&mut ParamTensor<T>]) -> f64 {
    params
        .iter()
        .map(|p| p.grads.iter().map(|g| g.f64() * g.f64()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Rescales gradients so their global norm is at most `max_norm`; returns the norm before clipping.
pub fn clip_grad_norm<T: Real>(params: &mut [&mut ParamTensor<T>], max_norm: f64) -> f64 {
    let norm = grad_norm(params);
    if norm > max_norm {
        let scale = T::of(max_norm / (norm + 1e-6));
        for p in params.iter_mut() {
            p.grads.mapv_inplace(|g| g * scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(v: f64) -> ParamTensor<f64> {
        ParamTensor::from_values(Array2::from_elem((1, 1), v))
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = scalar(3.5);
        let mut q = ParamTensor::<f64>::zeros(2, 3);
        q.values.fill(-1.25);
        let mut adam = AdamState::new(0.1, 1e-5);
        for _ in 0..5 {
            adam.step(&mut [&mut p, &mut q]).unwrap();
        }
        assert_eq!(p.values[[0, 0]], 3.5);
        assert!(q.values.iter().all(|&v| v == -1.25));
        assert_eq!(adam.step_count, 5);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        for g in [0.3, -7.0] {
            let mut p = scalar(1.0);
            p.grads[[0, 0]] = g;
            let mut adam = AdamState::new(0.01, 0.0);
            adam.step(&mut [&mut p]).unwrap();
            assert!((p.values[[0, 0]] - (1.0 - 0.01 * g.signum())).abs() < 1e-15);
            assert_eq!(p.grads[[0, 0]], 0.0);
        }
    }

    /// Independent scalar Adam.
    fn scalar_adam(theta0: f64, lr: f64, steps: usize) -> Vec<f64> {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-5);
        let (mut m, mut v, mut th) = (0.0, 0.0, theta0);
        let mut out = Vec::new();
        for t in 1..=steps {
            let g = 2.0 * th;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            th -= lr * mh / (vh.sqrt() + eps);
            out.push(th);
        }
        out
    }

    #[test]
    fn quadratic_matches_scalar_oracle() {
        let oracle = scalar_adam(1.0, 0.1, 10);
        let mut p = scalar(1.0);
        let mut adam = AdamState::new(0.1, 1e-5);
        let mut prev = 1.0f64;
        for want in oracle {
            p.grads[[0, 0]] = 2.0 * p.values[[0, 0]];
            adam.step(&mut [&mut p]).unwrap();
            let th = p.values[[0, 0]];
            assert!((th - want).abs() < 1e-12);
            assert!(th.abs() < prev.abs());
            prev = th;
        }
    }

    #[test]
    fn non_finite_gradient_is_numeric_error() {
        let mut p = scalar(1.0);
        p.grads[[0, 0]] = f64::INFINITY;
        assert!(matches!(AdamState::new(0.1, 1e-5).step(&mut [&mut p]), Err(Error::Numeric(_))));
    }

    proptest! {
        #[test]
        fn clipped_norm_is_bounded(gs in prop::collection::vec(-100.0f64..100.0, 1..40), bound in 0.01f64..5.0) {
            let mut p = ParamTensor::from_values(Array2::zeros((1, gs.len())));
            p.grads = Array2::from_shape_vec((1, gs.len()), gs).unwrap();
            let mut params = [&mut p];
            clip_grad_norm(&mut params, bound);
            prop_assert!(grad_norm(&params) <= bound + 1e-6);
        }
    }
}

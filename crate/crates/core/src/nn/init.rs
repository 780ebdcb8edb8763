//! Weight initialisation.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::tensor::Real;

/// Orthogonal matrix of shape `rows x cols` scaled by `gain`.
///
/// Rows are orthonormal when `rows <= cols`, columns otherwise.
pub fn orthogonal<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Array2<T> {
    let (tall, short) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    // Columns of `q` (tall x short) are orthonormalised with modified Gram-Schmidt.
    let mut q = Array2::<f64>::from_shape_fn((tall, short), |_| rng.sample(StandardNormal));
    for j in 0..short {
        for k in 0..j {
            let dot: f64 = (0..tall).map(|i| q[[i, j]] * q[[i, k]]).sum();
            for i in 0..tall {
                q[[i, j]] -= dot * q[[i, k]];
            }
        }
        let norm = (0..tall).map(|i| q[[i, j]] * q[[i, j]]).sum::<f64>().sqrt();
        let norm = if norm < 1e-12 { 1.0 } else { norm };
        for i in 0..tall {
            q[[i, j]] /= norm;
        }
    }
    let out = if rows >= cols { q } else { q.reversed_axes() };
    out.mapv(|v| T::of(v * gain))
}

pub fn uniform<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Array2<T> {
    Array2::from_shape_fn((rows, cols), |_| T::of(rng.random_range(-bound..=bound)))
}

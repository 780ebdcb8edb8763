//! Linear layer with learnable Gaussian weight noise.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::init::orthogonal;
use super::tensor::{ParamTensor, Real};
use crate::error::{Error, Result};

pub const DEFAULT_SIGMA_INIT: f64 = 0.017;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Rank-one noise `f(ε_out) f(ε_in)ᵀ` with `f(ε) = sign(ε)·√|ε|`.
    #[default]
    Factorized,
    /// One independent standard normal per weight.
    Independent,
}

/// One draw of the layer noise.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSample<T> {
    Factorized { eps_in: Array1<T>, eps_out: Array1<T> },
    Independent { eps_w: Array2<T>, eps_b: Array1<T> },
}

impl<T: Real> NoiseSample<T> {
    pub fn weight_noise(&self) -> Array2<T> {
        match self {
            NoiseSample::Factorized { eps_in, eps_out } => {
                let col = eps_out.view().insert_axis(Axis(1));
                let row = eps_in.view().insert_axis(Axis(0));
                col.dot(&row)
            }
            NoiseSample::Independent { eps_w, .. } => eps_w.clone(),
        }
    }

    pub fn bias_noise(&self) -> Array1<T> {
        match self {
            NoiseSample::Factorized { eps_out, .. } => eps_out.clone(),
            NoiseSample::Independent { eps_b, .. } => eps_b.clone(),
        }
    }
}

/// How noise draws map onto the rows of a batch.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseAssignment<T> {
    Shared(NoiseSample<T>),
    PerRow(Vec<NoiseSample<T>>),
}

pub fn scale_noise(e: f64) -> f64 {
    e.signum() * e.abs().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyLinear<T> {
    pub mu_w: ParamTensor<T>,
    pub sigma_w: ParamTensor<T>,
    pub mu_b: ParamTensor<T>,
    pub sigma_b: ParamTensor<T>,
    pub kind: NoiseKind,
}

impl<T: Real> NoisyLinear<T> {
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        output: usize,
        gain: f64,
        sigma_init: f64,
        kind: NoiseKind,
        rng: &mut R,
    ) -> Self {
        Self {
            mu_w: ParamTensor::from_values(orthogonal(output, input, gain, rng)),
            sigma_w: ParamTensor::from_values(Array2::from_elem((output, input), T::of(sigma_init))),
            mu_b: ParamTensor::zeros(1, output),
            sigma_b: ParamTensor::from_values(Array2::from_elem((1, output), T::of(sigma_init))),
            kind,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.mu_w.values.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.mu_w.values.nrows()
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseSample<T> {
        let (out, inp) = (self.output_dim(), self.input_dim());
        match self.kind {
            NoiseKind::Factorized => NoiseSample::Factorized {
                eps_in: Array1::from_shape_fn(inp, |_| T::of(scale_noise(rng.sample(StandardNormal)))),
                eps_out: Array1::from_shape_fn(out, |_| T::of(scale_noise(rng.sample(StandardNormal)))),
            },
            NoiseKind::Independent => NoiseSample::Independent {
                eps_w: Array2::from_shape_fn((out, inp), |_| T::of(rng.sample(StandardNormal))),
                eps_b: Array1::from_shape_fn(out, |_| T::of(rng.sample(StandardNormal))),
            },
        }
    }

    pub fn zero_noise(&self) -> NoiseSample<T> {
        match self.kind {
            NoiseKind::Factorized => NoiseSample::Factorized {
                eps_in: Array1::zeros(self.input_dim()),
                eps_out: Array1::zeros(self.output_dim()),
            },
            NoiseKind::Independent => NoiseSample::Independent {
                eps_w: Array2::zeros((self.output_dim(), self.input_dim())),
                eps_b: Array1::zeros(self.output_dim()),
            },
        }
    }

    /// Effective weight and bias under one noise draw.
    pub fn effective(&self, noise: &NoiseSample<T>) -> (Array2<T>, Array1<T>) {
        let w = &self.mu_w.values + &(&self.sigma_w.values * &noise.weight_noise());
        let b = self.mu_b.values.row(0).to_owned() + &(&self.sigma_b.values.row(0) * &noise.bias_noise());
        (w, b)
    }

    fn check_input(&self, x: &Array2<T>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "noisy layer expects input width {}, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Array2<T>, noise: &NoiseAssignment<T>) -> Result<Array2<T>> {
        self.check_input(x)?;
        match noise {
            NoiseAssignment::Shared(sample) => {
                let (w, b) = self.effective(sample);
                let mut y = x.dot(&w.t());
                y += &b;
                Ok(y)
            }
            NoiseAssignment::PerRow(samples) => {
                if samples.len() != x.nrows() {
                    return Err(Error::Shape(format!(
                        "{} noise draws for a batch of {} rows",
                        samples.len(),
                        x.nrows()
                    )));
                }
                let mut y = x.dot(&self.mu_w.values.t());
                y += &self.mu_b.values;
                let sigma_b = self.sigma_b.values.row(0);
                for (i, sample) in samples.iter().enumerate() {
                    let xi = x.row(i);
                    let extra = match sample {
                        NoiseSample::Factorized { eps_in, eps_out } => {
                            let scaled = &xi * eps_in;
                            let s = self.sigma_w.values.dot(&scaled);
                            (&s + &sigma_b) * eps_out
                        }
                        NoiseSample::Independent { eps_w, eps_b } => {
                            let s = (&self.sigma_w.values * eps_w).dot(&xi);
                            s + &(&sigma_b * eps_b)
                        }
                    };
                    let mut row = y.row_mut(i);
                    row += &extra;
                }
                Ok(y)
            }
        }
    }

    /// Forward under noise drawn from a dedicated seed.
    pub fn forward_seeded(&self, x: &Array2<T>, noise_seed: u64) -> Result<Array2<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let sample = self.sample_noise(&mut rng);
        self.forward(x, &NoiseAssignment::Shared(sample))
    }

    /// Backward for a batch that shared one noise draw.
    pub fn backward(&mut self, x: &Array2<T>, grad_out: &Array2<T>, noise: &NoiseSample<T>) -> Array2<T> {
        let (w, _) = self.effective(noise);
        let dw = grad_out.t().dot(x);
        let db = grad_out.sum_axis(Axis(0));
        self.sigma_w.grads += &(&dw * &noise.weight_noise());
        self.mu_w.grads += &dw;
        self.sigma_b.grads += &(&db * &noise.bias_noise()).insert_axis(Axis(0));
        self.mu_b.grads += &db.insert_axis(Axis(0));
        grad_out.dot(&w)
    }
}

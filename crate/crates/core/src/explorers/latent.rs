use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Distribution of the latent vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentDistribution {
    /// Uniform on the unit sphere.
    #[default]
    Sphere,
    /// Uniform on `[-0.5, 0.5]^d`.
    Uniform,
    /// Standard normal.
    Normal,
}

pub fn sample_latent<R: Rng + ?Sized>(dist: LatentDistribution, dim: usize, rng: &mut R) -> Vec<f64> {
    match dist {
        LatentDistribution::Sphere => loop {
            let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm >= 1e-12 {
                break g.into_iter().map(|x| x / norm).collect();
            }
        },
        LatentDistribution::Uniform => (0..dim).map(|_| rng.random_range(-0.5..=0.5)).collect(),
        LatentDistribution::Normal => (0..dim).map(|_| rng.sample(StandardNormal)).collect(),
    }
}

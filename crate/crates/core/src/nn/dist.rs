//! Policy distributions: Boltzmann over discrete actions, diagonal Gaussian over continuous ones.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::tensor::Real;
use crate::error::{Error, Result};

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum ActionSpace {
    Discrete(usize),
    Continuous(usize),
}

impl ActionSpace {
    /// Width of the policy head.
    pub fn head_dim(&self) -> usize {
        match *self {
            ActionSpace::Discrete(n) | ActionSpace::Continuous(n) => n,
        }
    }

    /// Width of a stored action row.
    pub fn action_width(&self) -> usize {
        match *self {
            ActionSpace::Discrete(_) => 1,
            ActionSpace::Continuous(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_row(&self) -> Vec<f64> {
        match self {
            Action::Discrete(a) => vec![*a as f64],
            Action::Continuous(v) => v.clone(),
        }
    }
}

/// Log-sum-exp normalised log-probabilities.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    pub log_probs: Vec<f64>,
}

impl Categorical {
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        if logits.is_empty() || logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::Numeric(format!("invalid categorical logits {logits:?}")));
        }
        Ok(Self {
            log_probs: log_softmax(logits),
        })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn log_prob(&self, action: usize) -> f64 {
        self.log_probs[action]
    }

    pub fn entropy(&self) -> f64 {
        -self.log_probs.iter().map(|&l| l.exp() * l).sum::<f64>()
    }

    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &l) in self.log_probs.iter().enumerate() {
            if l > self.log_probs[best] {
                best = i;
            }
        }
        best
    }

    /// Inverse-CDF sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &l) in self.log_probs.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                return i;
            }
        }
        self.log_probs.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, log_std: Vec<f64>) -> Result<Self> {
        if mean.len() != log_std.len() {
            return Err(Error::Shape("gaussian mean and log-std differ in length".into()));
        }
        if mean.iter().chain(&log_std).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite gaussian parameters".into()));
        }
        Ok(Self { mean, log_std })
    }

    pub fn log_prob(&self, action: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.log_std)
            .zip(action)
            .map(|((m, ls), a)| {
                let z = (a - m) / ls.exp();
                -0.5 * z * z - ls - HALF_LN_TWO_PI
            })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| 0.5 + HALF_LN_TWO_PI + ls).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| {
                let e: f64 = rng.sample(StandardNormal);
                m + ls.exp() * e
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyDistribution {
    Categorical(Categorical),
    Gaussian(DiagGaussian),
}

impl PolicyDistribution {
    /// Draw an action and report its log-probability and the distribution's entropy.
    pub fn sample_logprob_entropy<R: Rng + ?Sized>(&self, rng: &mut R) -> (Action, f64, f64) {
        match self {
            PolicyDistribution::Categorical(c) => {
                let a = c.sample(rng);
                (Action::Discrete(a), c.log_prob(a), c.entropy())
            }
            PolicyDistribution::Gaussian(g) => {
                let a = g.sample(rng);
                let lp = g.log_prob(&a);
                (Action::Continuous(a), lp, g.entropy())
            }
        }
    }

    pub fn mode(&self) -> Action {
        match self {
            PolicyDistribution::Categorical(c) => Action::Discrete(c.mode()),
            PolicyDistribution::Gaussian(g) => Action::Continuous(g.mean.clone()),
        }
    }

    pub fn log_prob(&self, action: &Action) -> Result<f64> {
        match (self, action) {
            (PolicyDistribution::Categorical(c), Action::Discrete(a)) if *a < c.log_probs.len() => Ok(c.log_prob(*a)),
            (PolicyDistribution::Gaussian(g), Action::Continuous(a)) if a.len() == g.mean.len() => Ok(g.log_prob(a)),
            _ => Err(Error::Shape("action does not fit the distribution".into())),
        }
    }
}

/// Row-wise categorical distributions over a batch of logits.
#[derive(Debug, Clone)]
pub struct CategoricalBatch<T> {
    pub log_probs: Array2<T>,
}

impl<T: Real> CategoricalBatch<T> {
    pub fn from_logits(logits: &Array2<T>) -> Result<Self> {
        let mut log_probs = logits.to_owned();
        for mut row in log_probs.rows_mut() {
            let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
            if !max.is_finite() {
                return Err(Error::Numeric("non-finite logits".into()));
            }
            let lse = max + row.iter().map(|&l| (l - max).exp()).sum::<T>().ln();
            row.mapv_inplace(|l| l - lse);
        }
        Ok(Self { log_probs })
    }

    pub fn log_prob_of(&self, actions: &[usize]) -> Array1<T> {
        Array1::from_iter(actions.iter().enumerate().map(|(i, &a)| self.log_probs[[i, a]]))
    }

    pub fn entropy(&self) -> Array1<T> {
        self.log_probs
            .map_axis(Axis(1), |row| -row.iter().map(|&l| l.exp() * l).sum::<T>())
    }

    /// Gradient with respect to the logits of `Σ_i dlogp_i·log π(a_i) + dent_i·H_i`.
    pub fn grad_logits(&self, actions: &[usize], dlogp: &Array1<T>, dent: &Array1<T>) -> Array2<T> {
        let entropy = self.entropy();
        let mut g = Array2::zeros(self.log_probs.raw_dim());
        for (i, mut row) in g.rows_mut().into_iter().enumerate() {
            let lp = self.log_probs.row(i);
            for k in 0..row.len() {
                let p = lp[k].exp();
                let onehot = if k == actions[i] { T::one() } else { T::zero() };
                row[k] = dlogp[i] * (onehot - p) - dent[i] * p * (lp[k] + entropy[i]);
            }
        }
        g
    }
}

/// Diagonal Gaussians sharing one state-independent log-std row.
#[derive(Debug, Clone)]
pub struct GaussianBatch<'a, T> {
    pub mean: &'a Array2<T>,
    pub log_std: &'a Array2<T>,
}

impl<'a, T: Real> GaussianBatch<'a, T> {
    pub fn log_prob_of(&self, actions: &Array2<T>) -> Array1<T> {
        let half = T::of(0.5);
        let c = T::of(HALF_LN_TWO_PI);
        let ls = self.log_std.row(0);
        Array1::from_iter(self.mean.rows().into_iter().zip(actions.rows()).map(|(m, a)| {
            let mut s = T::zero();
            for d in 0..m.len() {
                let z = (a[d] - m[d]) / ls[d].exp();
                s += -half * z * z - ls[d] - c;
            }
            s
        }))
    }

    pub fn entropy(&self) -> Array1<T> {
        let h: T = self.log_std.iter().map(|&ls| T::of(0.5 + HALF_LN_TWO_PI) + ls).sum();
        Array1::from_elem(self.mean.nrows(), h)
    }

    /// Gradients of `Σ_i dlogp_i·log π(a_i) + dent_i·H_i` with respect to the mean and log-std.
    pub fn grads(&self, actions: &Array2<T>, dlogp: &Array1<T>, dent: &Array1<T>) -> (Array2<T>, Array2<T>) {
        let ls = self.log_std.row(0);
        let mut gm = Array2::zeros(self.mean.raw_dim());
        let mut gs = Array2::zeros(self.log_std.raw_dim());
        for i in 0..self.mean.nrows() {
            for d in 0..self.mean.ncols() {
                let var = (ls[d] + ls[d]).exp();
                let diff = actions[[i, d]] - self.mean[[i, d]];
                gm[[i, d]] = dlogp[i] * diff / var;
                gs[[0, d]] += dlogp[i] * (diff * diff / var - T::one()) + dent[i];
            }
        }
        (gm, gs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_logits() {
        let c = Categorical::from_logits(&[0.0; 4]).unwrap();
        for p in c.probs() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert!((c.entropy() - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn standard_normal_at_mode() {
        let g = DiagGaussian::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let lp = g.log_prob(&[0.0, 0.0]);
        let want = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((lp - 2.0 * want).abs() < 1e-15);
    }

    #[test]
    fn log_probs_exponentiate_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let logits: Vec<f64> = (0..6).map(|_| rng.random_range(-30.0..30.0)).collect();
            let c = Categorical::from_logits(&logits).unwrap();
            let total: f64 = c.probs().iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn non_finite_logits_rejected() {
        assert!(matches!(Categorical::from_logits(&[0.0, f64::NAN]), Err(Error::Numeric(_))));
        assert!(CategoricalBatch::<f32>::from_logits(&Array2::from_elem((1, 2), f32::INFINITY)).is_err());
    }

    #[test]
    fn empirical_frequencies_match_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let logits: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
        let c = Categorical::from_logits(&logits).unwrap();
        let dist = PolicyDistribution::Categorical(c.clone());
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let (a, lp, h) = dist.sample_logprob_entropy(&mut rng);
            let Action::Discrete(a) = a else { unreachable!() };
            assert_eq!(lp, c.log_prob(a));
            assert_eq!(h, c.entropy());
            counts[a] += 1;
        }
        // independent softmax
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        for k in 0..4 {
            let p = logits[k].exp() / z;
            let f = counts[k] as f64 / n as f64;
            assert!((f - p).abs() < 0.01, "action {k}: freq {f} vs p {p}");
        }
    }

    #[test]
    fn batch_matches_single_sample() {
        let logits = Array2::from_shape_vec((2, 3), vec![0.1, -0.4, 2.0, 1.0, 1.0, -3.0]).unwrap();
        let b = CategoricalBatch::from_logits(&logits).unwrap();
        let ent = b.entropy();
        for i in 0..2 {
            let c = Categorical::from_logits(&logits.row(i).to_vec()).unwrap();
            assert!((c.entropy() - ent[i]).abs() < 1e-12);
            for k in 0..3 {
                assert!((c.log_prob(k) - b.log_probs[[i, k]]).abs() < 1e-12);
            }
        }
    }

    fn fd_check<F: Fn(&Array2<f64>) -> f64>(f: F, x: &Array2<f64>, analytic: &Array2<f64>) {
        let h = 1e-6;
        for idx in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.as_slice_mut().unwrap()[idx] += h;
            xm.as_slice_mut().unwrap()[idx] -= h;
            let num = (f(&xp) - f(&xm)) / (2.0 * h);
            let a = analytic.as_slice().unwrap()[idx];
            assert!((num - a).abs() < 1e-7 * (1.0 + a.abs()), "idx {idx}: {num} vs {a}");
        }
    }

    #[test]
    fn categorical_logit_gradient_matches_finite_differences() {
        let logits = Array2::from_shape_vec((3, 4), vec![0.2, -1.0, 0.5, 1.1, 0.0, 0.0, 0.3, -0.3, 2.0, -2.0, 0.1, 0.7]).unwrap();
        let actions = [2usize, 0, 3];
        let dlogp = Array1::from(vec![0.7, -1.2, 0.4]);
        let dent = Array1::from(vec![0.05, 0.05, -0.3]);
        let obj = |l: &Array2<f64>| {
            let b = CategoricalBatch::from_logits(l).unwrap();
            let lp = b.log_prob_of(&actions);
            let h = b.entropy();
            (0..3).map(|i| dlogp[i] * lp[i] + dent[i] * h[i]).sum::<f64>()
        };
        let g = CategoricalBatch::from_logits(&logits).unwrap().grad_logits(&actions, &dlogp, &dent);
        fd_check(obj, &logits, &g);
    }

    #[test]
    fn gaussian_gradients_match_finite_differences() {
        let mean = Array2::from_shape_vec((2, 2), vec![0.3, -0.2, 1.0, 0.5]).unwrap();
        let log_std = Array2::from_shape_vec((1, 2), vec![-0.4, 0.2]).unwrap();
        let actions = Array2::from_shape_vec((2, 2), vec![0.0, 0.1, 1.5, -0.4]).unwrap();
        let dlogp = Array1::from(vec![0.8, -0.5]);
        let dent = Array1::from(vec![0.1, 0.1]);
        let (gm, gs) = GaussianBatch { mean: &mean, log_std: &log_std }.grads(&actions, &dlogp, &dent);
        let obj_m = |m: &Array2<f64>| {
            let b = GaussianBatch { mean: m, log_std: &log_std };
            (&b.log_prob_of(&actions) * &dlogp).sum() + (&b.entropy() * &dent).sum()
        };
        fd_check(obj_m, &mean, &gm);
        let obj_s = |s: &Array2<f64>| {
            let b = GaussianBatch { mean: &mean, log_std: s };
            (&b.log_prob_of(&actions) * &dlogp).sum() + (&b.entropy() * &dent).sum()
        };
        fd_check(obj_s, &log_std, &gs);
    }
}

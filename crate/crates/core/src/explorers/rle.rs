use std::collections::BTreeMap;

use ndarray::{s, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::latent::{sample_latent, LatentDistribution};
use super::stats::{RewardNormalizer, RunningStats};
use crate::error::{Error, Result};
use crate::nn::{Activation, Checkpoint, Layer, Mlp, MlpSpec, Real};
use crate::rng::{lane, stream, Rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardVariant {
    /// `F = (f/‖f‖)·z`.
    #[default]
    UnitNormDot,
    /// `F = f·z`.
    StandardizedDot,
    /// `F ~ N(0, 1)`, independent of the state.
    WhiteNoise,
}

/// How φ's parameters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureInit {
    /// Orthogonal weights (gain √2, last layer 1), zero biases.
    Orthogonal,
    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    UniformFanIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RleConfig {
    pub distribution: LatentDistribution,
    pub dim: usize,
    pub variant: RewardVariant,
    /// Shorthand that forces the white-noise variant.
    pub white_noise: bool,
    pub z_conditioning: bool,
    pub include_prev_reward: bool,
    /// Standardise φ with running statistics before computing the reward.
    pub standardize_features: bool,
    pub tau: f64,
    pub resample_interval: usize,
    /// Report a resample as an episode boundary to the advantage estimator.
    pub episodic_cut: bool,
    #[serde(rename = "lambda_F")]
    pub lambda_f: f64,
    pub reward_normalization: bool,
    /// Hidden widths of φ; its output width is `dim`.
    pub feature_hidden: Vec<usize>,
    pub feature_activation: Activation,
    pub feature_init: FeatureInit,
}

impl Default for RleConfig {
    fn default() -> Self {
        Self {
            distribution: LatentDistribution::Sphere,
            dim: 4,
            variant: RewardVariant::UnitNormDot,
            white_noise: false,
            z_conditioning: true,
            include_prev_reward: false,
            standardize_features: false,
            tau: 0.0,
            resample_interval: 128,
            episodic_cut: false,
            lambda_f: 0.1,
            reward_normalization: false,
            feature_hidden: vec![64, 64, 64],
            feature_activation: Activation::Relu,
            feature_init: FeatureInit::Orthogonal,
        }
    }
}

impl RleConfig {
    pub fn effective_variant(&self) -> RewardVariant {
        if self.white_noise {
            RewardVariant::WhiteNoise
        } else {
            self.variant
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("rle.dim must be at least 1".into()));
        }
        if self.resample_interval == 0 {
            return Err(Error::Config("rle.resample_interval must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config("rle.tau must lie in [0, 1]".into()));
        }
        if self.lambda_f < 0.0 {
            return Err(Error::Config("rle.lambda_F must be non-negative".into()));
        }
        Ok(())
    }

    /// Width appended to observations.
    pub fn extra_obs_dim(&self) -> usize {
        (if self.z_conditioning { self.dim } else { 0 }) + usize::from(self.include_prev_reward)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleReason {
    Interval,
    Done,
}

/// Running record of the quantities the method promises to keep bounded.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RleInvariants {
    pub rewards_computed: u64,
    pub max_abs_reward: f64,
    pub max_latent_norm_error: f64,
    pub degenerate_features: u64,
    /// Steps spent on a latent before it was replaced, keyed by reason and length.
    pub resample_lengths: BTreeMap<(ResampleReason, usize), u64>,
}

/// Unit-norm dot product; zero when the feature is degenerate.
pub fn unit_norm_dot(f: &[f64], z: &[f64]) -> Option<f64> {
    let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return None;
    }
    Some(f.iter().zip(z).map(|(a, b)| a / norm * b).sum())
}

pub fn dot(f: &[f64], z: &[f64]) -> f64 {
    f.iter().zip(z).map(|(a, b)| a * b).sum()
}

/// `θ_φ ← τ·θ_V + (1−τ)·θ_φ` over every layer of φ except its output
/// projection. Only the leading `obs_dim` input columns of the first layer
/// are blended, since the value network also sees the latent.
pub fn soft_update<T: Real>(feature: &mut Mlp<T>, value: &Mlp<T>, tau: f64, obs_dim: usize) -> Result<()> {
    let fl = feature.layers.len();
    let vl = value.layers.len();
    if fl < 2 || vl < fl {
        return Err(Error::Config(format!(
            "feature backbone of {} layers cannot track a value network of {vl}",
            fl - 1
        )));
    }
    let blend = |dst: &mut Array2<T>, src: ndarray::ArrayView2<T>| {
        let t = T::of(tau);
        let keep = T::of(1.0 - tau);
        ndarray::Zip::from(dst).and(src).for_each(|d, &s| *d = t * s + keep * *d);
    };
    for i in 0..fl - 1 {
        let (Layer::Dense(f), Layer::Dense(v)) = (&mut feature.layers[i], &value.layers[i]) else {
            return Err(Error::Config("soft update needs dense backbone layers".into()));
        };
        let (fo, fi) = (f.weight.values.nrows(), f.weight.values.ncols());
        let (vo, vi) = (v.weight.values.nrows(), v.weight.values.ncols());
        let cols_ok = if i == 0 { fi == obs_dim && vi >= obs_dim } else { fi == vi };
        if fo != vo || !cols_ok {
            return Err(Error::Config(format!(
                "feature layer {i} is {fo}x{fi} but value layer {i} is {vo}x{vi}"
            )));
        }
        blend(&mut f.weight.values, v.weight.values.slice(s![.., ..fi]));
        blend(&mut f.bias.values, v.bias.values.view());
    }
    Ok(())
}

/// Random latent exploration state for every worker.
#[derive(Debug, Clone)]
pub struct Rle {
    pub cfg: RleConfig,
    pub feature_net: Mlp<f32>,
    pub feature_stats: RunningStats,
    pub invariants: RleInvariants,
    obs_dim: usize,
    latents: Vec<Vec<f64>>,
    steps_since_resample: Vec<usize>,
    prev_reward: Vec<f64>,
    latent_rngs: Vec<Rng>,
    noise_rngs: Vec<Rng>,
    normalizer: Option<RewardNormalizer>,
    pending_features: Vec<Vec<f64>>,
}

impl Rle {
    pub fn new(cfg: RleConfig, obs_dim: usize, workers: usize, seed: u64, discount: f64) -> Result<Self> {
        cfg.validate()?;
        let mut widths = cfg.feature_hidden.clone();
        widths.push(cfg.dim);
        let spec = MlpSpec::new(obs_dim, &widths, cfg.feature_activation);
        let mut init = stream(seed, Stream::FeatureInit);
        let feature_net = match cfg.feature_init {
            FeatureInit::Orthogonal => Mlp::new(spec, 2f64.sqrt(), 1.0, None, &mut init)?,
            FeatureInit::UniformFanIn => Mlp::uniform_fan_in(spec, &mut init)?,
        };
        let mut rle = Self {
            feature_stats: RunningStats::new(cfg.dim),
            invariants: RleInvariants::default(),
            obs_dim,
            latents: Vec::with_capacity(workers),
            steps_since_resample: vec![0; workers],
            prev_reward: vec![0.0; workers],
            noise_rngs: (0..workers).map(|i| lane(seed, Stream::WhiteNoise, i)).collect(),
            normalizer: cfg.reward_normalization.then(|| RewardNormalizer::new(workers, discount)),
            pending_features: Vec::new(),
            latent_rngs: (0..workers).map(|i| lane(seed, Stream::Latent, i)).collect(),
            feature_net,
            cfg,
        };
        for w in 0..workers {
            let z = rle.draw(w)?;
            rle.latents.push(z);
        }
        Ok(rle)
    }

    fn draw(&mut self, worker: usize) -> Result<Vec<f64>> {
        let z = sample_latent(self.cfg.distribution, self.cfg.dim, &mut self.latent_rngs[worker]);
        if self.cfg.distribution == LatentDistribution::Sphere {
            let err = (z.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs();
            self.invariants.max_latent_norm_error = self.invariants.max_latent_norm_error.max(err);
            if err >= 1e-9 {
                return Err(Error::Invariant(format!("latent norm off the unit sphere by {err}")));
            }
        }
        Ok(z)
    }

    pub fn workers(&self) -> usize {
        self.latents.len()
    }

    pub fn latent(&self, worker: usize) -> &[f64] {
        &self.latents[worker]
    }

    pub fn steps_since_resample(&self, worker: usize) -> usize {
        self.steps_since_resample[worker]
    }

    pub fn extra_obs_dim(&self) -> usize {
        self.cfg.extra_obs_dim()
    }

    pub fn augment(&self, obs: &[f64], worker: usize, out: &mut Vec<f64>) {
        out.extend_from_slice(obs);
        if self.cfg.z_conditioning {
            out.extend_from_slice(&self.latents[worker]);
        }
        if self.cfg.include_prev_reward {
            out.push(self.prev_reward[worker]);
        }
    }

    /// φ of a batch of raw observations, in double precision.
    pub fn features(&self, obs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let x = Array2::from_shape_fn((obs.len(), self.obs_dim), |(i, j)| obs[i][j] as f32);
        let y = self.feature_net.predict(&x)?;
        Ok(y.rows().into_iter().map(|r| r.iter().map(|v| *v as f64).collect()).collect())
    }

    /// Raw randomized reward of one feature vector under one latent.
    pub fn reward_from_feature(&mut self, phi: &[f64], z: &[f64]) -> Result<f64> {
        let f = if self.cfg.standardize_features {
            self.feature_stats.standardize(phi)
        } else {
            phi.to_vec()
        };
        let r = match self.cfg.effective_variant() {
            RewardVariant::UnitNormDot => match unit_norm_dot(&f, z) {
                Some(r) => {
                    let bound = z.iter().map(|x| x * x).sum::<f64>().sqrt() + 1e-12;
                    if r.abs() > bound {
                        return Err(Error::Invariant(format!("randomized reward {r} exceeds |z| = {bound}")));
                    }
                    r
                }
                None => {
                    self.invariants.degenerate_features += 1;
                    log::warn!("degenerate feature vector; randomized reward set to 0");
                    0.0
                }
            },
            RewardVariant::StandardizedDot => dot(&f, z),
            RewardVariant::WhiteNoise => unreachable!("white noise does not use features"),
        };
        Ok(r)
    }

    /// Scaled intrinsic rewards for the transition into `next_obs`
    /// (observations before any auto-reset).
    pub fn intrinsic_rewards(&mut self, next_obs: &[&[f64]], dones: &[bool]) -> Result<Vec<f64>> {
        let n = next_obs.len();
        let raw: Vec<f64> = if self.cfg.effective_variant() == RewardVariant::WhiteNoise {
            self.noise_rngs.iter_mut().take(n).map(|r| StandardNormal.sample(r)).collect()
        } else {
            let feats = self.features(next_obs)?;
            let mut out = Vec::with_capacity(n);
            for (w, phi) in feats.iter().enumerate() {
                let z = self.latents[w].clone();
                out.push(self.reward_from_feature(phi, &z)?);
            }
            if self.cfg.standardize_features {
                self.pending_features.extend(feats);
            }
            out
        };
        for &r in &raw {
            self.invariants.rewards_computed += 1;
            self.invariants.max_abs_reward = self.invariants.max_abs_reward.max(r.abs());
        }
        for (w, &r) in raw.iter().enumerate() {
            self.prev_reward[w] = if dones[w] { 0.0 } else { r };
        }
        let normed = match self.normalizer.as_mut() {
            Some(nz) => nz.normalize(&raw, dones)?,
            None => raw,
        };
        Ok(if self.cfg.lambda_f == 0.0 {
            vec![0.0; n]
        } else {
            normed.into_iter().map(|r| self.cfg.lambda_f * r).collect()
        })
    }

    /// Whether the step just taken exhausts the worker's latent.
    pub fn resample_due(&self, worker: usize, done: bool) -> bool {
        done || self.steps_since_resample[worker] + 1 >= self.cfg.resample_interval
    }

    /// Whether a resample at this step is reported to the buffer as a boundary.
    pub fn cuts_trajectory(&self, worker: usize, done: bool) -> bool {
        self.cfg.episodic_cut && self.resample_due(worker, done)
    }

    /// Advances the worker's counter and resamples its latent when due.
    pub fn maybe_resample(&mut self, worker: usize, done: bool) -> Result<bool> {
        self.steps_since_resample[worker] += 1;
        let steps = self.steps_since_resample[worker];
        let reason = if done {
            ResampleReason::Done
        } else if steps >= self.cfg.resample_interval {
            ResampleReason::Interval
        } else {
            return Ok(false);
        };
        *self.invariants.resample_lengths.entry((reason, steps)).or_default() += 1;
        self.latents[worker] = self.draw(worker)?;
        self.steps_since_resample[worker] = 0;
        Ok(true)
    }

    /// Folds this rollout's features into the running statistics and moves φ
    /// toward the value network.
    pub fn post_update(&mut self, value: &Mlp<f32>) -> Result<()> {
        if !self.pending_features.is_empty() {
            let batch = std::mem::take(&mut self.pending_features);
            self.feature_stats.update(&batch)?;
        }
        if self.cfg.tau > 0.0 {
            soft_update(&mut self.feature_net, value, self.cfg.tau, self.obs_dim)?;
        }
        Ok(())
    }

    pub fn write_checkpoint(&self, ckpt: &mut Checkpoint) {
        ckpt.push_mlp("feature", &self.feature_net);
    }

    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        ckpt.load_mlp("feature", &mut self.feature_net)
    }
}

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::stats::{RewardNormalizer, RunningStats};
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamState, Checkpoint, Mlp, MlpSpec};
use crate::rng::{stream, Rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RndConfig {
    pub coef: f64,
    /// Fraction of samples kept in each predictor minibatch.
    pub drop_probability: f64,
    pub predictor_widths: Vec<usize>,
    pub target_widths: Vec<usize>,
    pub activation: Activation,
    pub obs_clip: f64,
    /// Random-policy steps used to seed observation statistics; 0 means one batch.
    pub warmup_steps: usize,
    pub reward_normalization: bool,
}

impl Default for RndConfig {
    fn default() -> Self {
        Self {
            coef: 1.0,
            drop_probability: 0.25,
            predictor_widths: vec![256; 5],
            target_widths: vec![64, 256],
            activation: Activation::Relu,
            obs_clip: 5.0,
            warmup_steps: 0,
            reward_normalization: true,
        }
    }
}

impl RndConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(Error::Config("rnd.drop_probability must lie in [0, 1]".into()));
        }
        if self.predictor_widths.last() != self.target_widths.last() {
            return Err(Error::Config(
                "rnd.predictor_widths and rnd.target_widths must end in the same width".into(),
            ));
        }
        if self.coef < 0.0 || self.obs_clip <= 0.0 {
            return Err(Error::Config("rnd.coef must be non-negative and rnd.obs_clip positive".into()));
        }
        Ok(())
    }
}

/// Random network distillation: the bonus is a trained predictor's error
/// against a frozen random target.
#[derive(Debug, Clone)]
pub struct Rnd {
    pub cfg: RndConfig,
    pub target: Mlp<f32>,
    pub predictor: Mlp<f32>,
    pub obs_stats: RunningStats,
    optimizer: AdamState<f32>,
    normalizer: Option<RewardNormalizer>,
    drop_rng: Rng,
    shuffle_rng: Rng,
    pending_obs: Vec<Vec<f64>>,
    epochs: usize,
    minibatches: usize,
}

impl Rnd {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cfg: RndConfig,
        obs_dim: usize,
        workers: usize,
        seed: u64,
        discount: f64,
        lr: f64,
        adam_epsilon: f64,
        epochs: usize,
        minibatches: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut init = stream(seed, Stream::RndInit);
        let g = 2f64.sqrt();
        let target = Mlp::new(MlpSpec::new(obs_dim, &cfg.target_widths, cfg.activation), g, g, None, &mut init)?;
        let predictor = Mlp::new(MlpSpec::new(obs_dim, &cfg.predictor_widths, cfg.activation), g, g, None, &mut init)?;
        Ok(Self {
            target,
            predictor,
            obs_stats: RunningStats::new(obs_dim),
            optimizer: AdamState::new(lr, adam_epsilon),
            normalizer: cfg.reward_normalization.then(|| RewardNormalizer::new(workers, discount)),
            drop_rng: stream(seed, Stream::RndDrop),
            shuffle_rng: stream(seed ^ 0x52_4e_44, Stream::Shuffle),
            pending_obs: Vec::new(),
            epochs,
            minibatches,
            cfg,
        })
    }

    fn normalized(&self, obs: &[&[f64]]) -> Array2<f32> {
        let c = self.cfg.obs_clip;
        let dim = self.obs_stats.dim();
        let mut x = Array2::zeros((obs.len(), dim));
        for (i, o) in obs.iter().enumerate() {
            for (j, v) in self.obs_stats.standardize(o).into_iter().enumerate() {
                x[[i, j]] = v.clamp(-c, c) as f32;
            }
        }
        x
    }

    /// Unscaled squared prediction error per observation.
    pub fn bonus(&self, obs: &[&[f64]]) -> Result<Vec<f64>> {
        let x = self.normalized(obs);
        let t = self.target.predict(&x)?;
        let p = self.predictor.predict(&x)?;
        Ok((&p - &t)
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|d| (*d as f64).powi(2)).sum())
            .collect())
    }

    pub fn observe_warmup(&mut self, obs: &[Vec<f64>]) -> Result<()> {
        self.obs_stats.update(obs)
    }

    pub fn intrinsic_rewards(&mut self, next_obs: &[&[f64]], dones: &[bool]) -> Result<Vec<f64>> {
        let raw = self.bonus(next_obs)?;
        self.pending_obs.extend(next_obs.iter().map(|o| o.to_vec()));
        let normed = match self.normalizer.as_mut() {
            Some(n) => n.normalize(&raw, dones)?,
            None => raw,
        };
        Ok(normed.into_iter().map(|r| self.cfg.coef * r).collect())
    }

    /// One predictor step on a batch where each sample is kept with
    /// probability `retain`. Returns the loss over kept samples and how many
    /// were kept; nothing is updated when none are.
    pub fn update(&mut self, obs: &[&[f64]], retain: f64) -> Result<(f64, usize)> {
        if obs.is_empty() {
            return Err(Error::Usage("predictor update needs a non-empty batch".into()));
        }
        let kept: Vec<&[f64]> = obs.iter().copied().filter(|_| self.drop_rng.random_bool(retain)).collect();
        if kept.is_empty() {
            return Ok((0.0, 0));
        }
        let x = self.normalized(&kept);
        let t = self.target.predict(&x)?;
        let p = self.predictor.forward(&x)?;
        let diff = &p - &t;
        let denom = diff.len() as f32;
        let loss = diff.iter().map(|d| (*d as f64).powi(2)).sum::<f64>() / denom as f64;
        let grad = diff.mapv(|d| 2.0 * d / denom);
        self.predictor.backward(&grad)?;
        let mut params = self.predictor.params_mut();
        self.optimizer.step(&mut params)?;
        Ok((loss, kept.len()))
    }

    /// Refreshes observation statistics and trains the predictor on this
    /// rollout's observations. Returns the mean predictor loss.
    pub fn post_update(&mut self) -> Result<f64> {
        let batch = std::mem::take(&mut self.pending_obs);
        if batch.is_empty() {
            return Ok(0.0);
        }
        self.obs_stats.update(&batch)?;
        let size = batch.len().div_ceil(self.minibatches.max(1));
        let mut order: Vec<usize> = (0..batch.len()).collect();
        let mut total = 0.0;
        let mut count = 0.0;
        for _ in 0..self.epochs {
            order.shuffle(&mut self.shuffle_rng);
            for chunk in order.chunks(size) {
                let rows: Vec<&[f64]> = chunk.iter().map(|&i| batch[i].as_slice()).collect();
                let (loss, _) = self.update(&rows, self.cfg.drop_probability)?;
                total += loss;
                count += 1.0;
            }
        }
        Ok(if count > 0.0 { total / count } else { 0.0 })
    }

    /// FNV-1a over the target's parameter bytes.
    pub fn target_checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (_, p) in self.target.named_params() {
            for v in p.values.iter() {
                for b in v.to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }

    pub fn write_checkpoint(&self, ckpt: &mut Checkpoint) {
        ckpt.push_mlp("rnd_target", &self.target);
        ckpt.push_mlp("rnd_predictor", &self.predictor);
    }

    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        ckpt.load_mlp("rnd_target", &mut self.target)?;
        ckpt.load_mlp("rnd_predictor", &mut self.predictor)
    }
}

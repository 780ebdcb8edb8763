//! PPO: rollout storage, advantage estimation, the clipped-surrogate update
//! and the training loop that drives explorers.

pub mod agent;
pub mod buffer;
pub mod gae;
pub mod train;

pub mod update;

use serde::{Deserialize, Serialize};

pub use agent::{ActSample, ActorCritic};
pub use buffer::{BatchActions, RolloutBuffer};
pub use gae::{compute_gae, compute_gae_batch};
pub use train::{metrics_csv, train, MetricsRow, TrainArtifacts, TrainOptions};

pub use update::{minibatch_loss, normalize_advantages, ppo_update, LossReport, Minibatch};

use crate::error::{Error, Result};
use crate::nn::Activation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_coef: f64,
    pub entropy_weight: f64,
    pub value_weight: f64,
    pub grad_norm_bound: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub lr: f64,
    pub adam_epsilon: f64,
    pub advantage_normalization: bool,
    pub clipped_value_loss: bool,
    /// Hidden widths shared by the policy and value networks.
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_coef: 0.2,
            entropy_weight: 0.01,
            value_weight: 0.5,
            grad_norm_bound: 0.5,
            epochs: 4,
            minibatches: 4,
            lr: 1e-3,
            adam_epsilon: 1e-5,
            advantage_normalization: true,
            clipped_value_loss: true,
            hidden: vec![64, 64],
            activation: Activation::Tanh,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.gamma) || !unit(self.gae_lambda) {
            return Err(Error::Config("ppo.gamma and ppo.gae_lambda must lie in [0, 1]".into()));
        }
        if self.clip_coef <= 0.0 {
            return Err(Error::Config("ppo.clip_coef must be positive".into()));
        }
        if self.epochs == 0 || self.minibatches == 0 {
            return Err(Error::Config("ppo.epochs and ppo.minibatches must be positive".into()));
        }
        if self.lr <= 0.0 || self.grad_norm_bound <= 0.0 {
            return Err(Error::Config("ppo.lr and ppo.grad_norm_bound must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("ppo.hidden widths must be positive".into()));
        }
        Ok(())
    }
}

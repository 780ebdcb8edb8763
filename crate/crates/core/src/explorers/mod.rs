//! Exploration strategies behind one interface: random latent exploration,
//! random network distillation, noisy networks and none, plus running
//! statistics and reward normalisation.

pub mod latent;
pub mod rle;
pub mod rnd;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use latent::{sample_latent, LatentDistribution};
pub use rle::{FeatureInit, ResampleReason, RewardVariant, Rle, RleConfig, RleInvariants};
pub use rnd::{Rnd, RndConfig};
pub use stats::{RewardNormalizer, RunningStats};

use crate::error::Result;
use crate::nn::{Checkpoint, Mlp, NoiseKind, NoisySpec, DEFAULT_SIGMA_INIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorerKind {
    #[default]
    None,
    Rle,
    Rnd,
    Noisynet,
}

impl ExplorerKind {
    pub fn name(self) -> &'static str {
        match self {
            ExplorerKind::None => "none",
            ExplorerKind::Rle => "rle",
            ExplorerKind::Rnd => "rnd",
            ExplorerKind::Noisynet => "noisynet",
        }
    }
}

/// Noisy networks are a construction policy: the last `layers` layers of the
/// policy and value networks become noisy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoisyNetConfig {
    pub sigma_init: f64,
    pub kind: NoiseKind,
    pub layers: usize,
}

impl Default for NoisyNetConfig {
    fn default() -> Self {
        Self {
            sigma_init: DEFAULT_SIGMA_INIT,
            kind: NoiseKind::Factorized,
            layers: 2,
        }
    }
}

impl NoisyNetConfig {
    pub fn spec(&self) -> NoisySpec {
        NoisySpec {
            layers: self.layers,
            sigma_init: self.sigma_init,
            kind: self.kind,
        }
    }
}

/// Per-run explorer state. `None` leaves observations unchanged, adds no
/// reward and never cuts trajectories.
#[derive(Debug, Clone)]
pub enum Explorer {
    None,
    Rle(Box<Rle>),
    Rnd(Box<Rnd>),
}

impl Explorer {
    pub fn extra_obs_dim(&self) -> usize {
        match self {
            Explorer::Rle(r) => r.extra_obs_dim(),
            _ => 0,
        }
    }

    pub fn augment(&self, obs: &[f64], worker: usize, out: &mut Vec<f64>) {
        match self {
            Explorer::Rle(r) => r.augment(obs, worker, out),
            _ => out.extend_from_slice(obs),
        }
    }

    pub fn latent(&self, worker: usize) -> &[f64] {
        match self {
            Explorer::Rle(r) => r.latent(worker),
            _ => &[],
        }
    }

    /// Scaled intrinsic rewards for transitions into `next_obs`.
    pub fn intrinsic_rewards(&mut self, next_obs: &[&[f64]], dones: &[bool]) -> Result<Vec<f64>> {
        match self {
            Explorer::None => Ok(vec![0.0; next_obs.len()]),
            Explorer::Rle(r) => r.intrinsic_rewards(next_obs, dones),
            Explorer::Rnd(r) => r.intrinsic_rewards(next_obs, dones),
        }
    }

    /// Whether the step just taken ends the worker's trajectory for the
    /// advantage estimator even though the episode continues.
    pub fn cuts_trajectory(&self, worker: usize, done: bool) -> bool {
        match self {
            Explorer::Rle(r) => r.cuts_trajectory(worker, done),
            _ => false,
        }
    }

    pub fn on_step_end(&mut self, worker: usize, done: bool) -> Result<bool> {
        match self {
            Explorer::Rle(r) => r.maybe_resample(worker, done),
            _ => Ok(false),
        }
    }

    /// Random-policy steps wanted before training starts.
    pub fn warmup_steps(&self, batch: usize) -> usize {
        match self {
            Explorer::Rnd(r) if r.cfg.warmup_steps == 0 => batch,
            Explorer::Rnd(r) => r.cfg.warmup_steps,
            _ => 0,
        }
    }

    pub fn observe_warmup(&mut self, obs: &[Vec<f64>]) -> Result<()> {
        match self {
            Explorer::Rnd(r) => r.observe_warmup(obs),
            _ => Ok(()),
        }
    }

    pub fn post_update(&mut self, value: &Mlp<f32>) -> Result<()> {
        match self {
            Explorer::None => Ok(()),
            Explorer::Rle(r) => r.post_update(value),
            Explorer::Rnd(r) => r.post_update().map(|_| ()),
        }
    }

    pub fn write_checkpoint(&self, ckpt: &mut Checkpoint) {
        match self {
            Explorer::None => {}
            Explorer::Rle(r) => r.write_checkpoint(ckpt),
            Explorer::Rnd(r) => r.write_checkpoint(ckpt),
        }
    }

    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        match self {
            Explorer::None => Ok(()),
            Explorer::Rle(r) => r.load_checkpoint(ckpt),
            Explorer::Rnd(r) => r.load_checkpoint(ckpt),
        }
    }

    pub fn rle(&self) -> Option<&Rle> {
        match self {
            Explorer::Rle(r) => Some(r),
            _ => None,
        }
    }

    pub fn rnd(&self) -> Option<&Rnd> {
        match self {
            Explorer::Rnd(r) => Some(r),
            _ => None,
        }
    }
}

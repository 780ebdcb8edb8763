//! Random latent exploration on top of PPO, with RND, NoisyNet and plain-PPO
//! baselines, toy environments and evaluation statistics.

pub mod config;
pub mod envs;
pub mod eval;
pub mod error;
pub mod explorers;
pub mod metrics;
pub mod nn;
pub mod ppo;
pub mod rng;
pub mod run;

pub use error::{Error, Result};

//! Minimal neural-network kernel: dense and noisy layers, MLPs, policy
//! distributions, Adam, gradient checking and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod dist;
pub mod gradcheck;
pub mod init;
pub mod linear;
pub mod mlp;
pub mod noisy;
pub mod tensor;

pub use adam::{clip_grad_norm, grad_norm, AdamState};
pub use checkpoint::Checkpoint;
pub use dist::{Action, ActionSpace, Categorical, CategoricalBatch, DiagGaussian, GaussianBatch, PolicyDistribution};
pub use gradcheck::{grad_check, GradCheckReport};
pub use linear::Linear;
pub use mlp::{Activation, Layer, Mlp, MlpSpec, NoisySpec, OutputActivation};
pub use noisy::{NoiseAssignment, NoiseKind, NoiseSample, NoisyLinear, DEFAULT_SIGMA_INIT};
pub use tensor::{ParamTensor, Real};

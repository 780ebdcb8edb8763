//! Rollouts of a frozen policy: per-latent trajectories and visitation.

use crate::config::RunConfig;
use crate::envs::{Env, VecEnv};
use crate::error::{Error, Result};
use crate::explorers::{sample_latent, Explorer};
use crate::metrics::{TrajectoryLog, VisitationGrid};
use crate::nn::Checkpoint;
use crate::ppo::train::{build_agent, build_env, build_explorer};
use crate::ppo::ActorCritic;
use crate::rng::{lane, stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Episodes per latent (or in total, without RLE).
    pub n_rollouts: usize,
    /// Distinct latents drawn for an RLE policy; ignored otherwise.
    pub z_samples: usize,
    /// Mode of the action distribution instead of a sample.
    pub greedy: bool,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            n_rollouts: 1,
            z_samples: 1,
            greedy: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalResult {
    pub trajectories: TrajectoryLog,
    pub visitation: VisitationGrid,
    /// Task return of every episode, in rollout order.
    pub returns: Vec<f64>,
    pub latents: Vec<Vec<f64>>,
}

/// The frozen agent and explorer stored in `ckpt`, rebuilt for `cfg`.
pub fn restore(cfg: &RunConfig, ckpt: &Checkpoint) -> Result<(ActorCritic<f32>, Explorer)> {
    let probe = build_env(cfg, lane(cfg.seed, Stream::Eval, 0));
    let obs_dim = probe.observation_dim();
    let mut explorer = build_explorer(cfg, obs_dim)?;
    let input_dim = obs_dim + explorer.extra_obs_dim();
    let mut agent = build_agent(cfg, input_dim, probe.action_space())?;
    agent.load_checkpoint(ckpt).map_err(|e| {
        Error::Checkpoint(format!(
            "checkpoint does not fit a policy with {input_dim} inputs ({obs_dim} observation + {} explorer): {e}",
            input_dim - obs_dim
        ))
    })?;
    explorer.load_checkpoint(ckpt)?;
    agent.clear_noise();
    Ok((agent, explorer))
}

/// Rolls out `n_rollouts` full episodes for each latent, keeping the latent
/// fixed for the whole episode.
pub fn evaluate(cfg: &RunConfig, agent: &ActorCritic<f32>, explorer: &Explorer, opts: &EvalOptions) -> Result<EvalResult> {
    if opts.n_rollouts == 0 {
        return Err(Error::Usage("evaluation needs at least one rollout".into()));
    }
    let mut latent_rng = stream(opts.seed, Stream::Eval);
    let mut action_rng = lane(opts.seed, Stream::Eval, usize::MAX - 1);
    let (latents, rle) = match explorer.rle() {
        Some(r) => {
            if opts.z_samples == 0 {
                return Err(Error::Usage("an RLE policy needs at least one latent sample".into()));
            }
            let zs = (0..opts.z_samples)
                .map(|_| sample_latent(r.cfg.distribution, r.cfg.dim, &mut latent_rng))
                .collect::<Vec<_>>();
            (zs, Some(r.clone()))
        }
        None => (vec![Vec::new()], None),
    };
    let mut rle = rle;
    let mut out = EvalResult {
        latents: latents.clone(),
        ..Default::default()
    };
    let mut worker = 0;
    for (z_id, z) in latents.iter().enumerate() {
        for _ in 0..opts.n_rollouts {
            let mut env = VecEnv::new(vec![build_env(cfg, lane(opts.seed, Stream::Eval, worker))])?;
            if let Some(c) = env.worker(0).cell() {
                out.trajectories.push(0, worker, c, z_id);
            }
            let mut prev_reward = 0.0;
            let mut t = 0u64;
            loop {
                let mut input = env.observations()[0].clone();
                if let Some(r) = &rle {
                    if r.cfg.z_conditioning {
                        input.extend_from_slice(z);
                    }
                    if r.cfg.include_prev_reward {
                        input.push(prev_reward);
                    }
                }
                let x = ndarray::Array2::from_shape_vec((1, input.len()), input.iter().map(|&v| v as f32).collect())
                    .map_err(|e| Error::Shape(e.to_string()))?;
                let sample = agent.act(&x, opts.greedy, &mut action_rng)?.remove(0);
                let step = env.step(std::slice::from_ref(&sample.action))?.remove(0);
                t += 1;
                if let Some(c) = step.result.cell {
                    out.trajectories.push(t, worker, c, z_id);
                    out.visitation.record(c);
                }
                if let Some(r) = rle.as_mut() {
                    if r.cfg.include_prev_reward {
                        let phi = r.features(&[step.next_observation()])?.remove(0);
                        prev_reward = r.reward_from_feature(&phi, z)?;
                    }
                }
                if let Some((ret, _)) = step.episode {
                    out.returns.push(ret);
                    break;
                }
            }
            worker += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::{train, TrainOptions};

    fn trained(preset: &str) -> (RunConfig, Checkpoint) {
        let cfg = RunConfig::from_value(
            serde_json::json!({"preset": preset}),
            &["total_steps=1024".into(), "env.workers=8".into(), "env.horizon=60".into()],
        )
        .unwrap();
        let mut a = train(&cfg, &TrainOptions { keep_checkpoints: true, ..Default::default() }).unwrap();
        (cfg, a.checkpoints.pop().unwrap().1)
    }

    #[test]
    fn greedy_rollout_is_reproducible() {
        let (cfg, ck) = trained("fourroom-ppo");
        let (agent, ex) = restore(&cfg, &ck).unwrap();
        let o = EvalOptions { greedy: true, ..Default::default() };
        let a = evaluate(&cfg, &agent, &ex, &o).unwrap();
        let b = evaluate(&cfg, &agent, &ex, &o).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
        assert_eq!(a.returns.len(), 1);
        assert_eq!(a.trajectories.records.len(), 61);
        a.trajectories.check_adjacency().unwrap();
    }

    #[test]
    fn one_z_id_per_latent() {
        let (cfg, ck) = trained("fourroom-rle");
        let (agent, ex) = restore(&cfg, &ck).unwrap();
        let o = EvalOptions { z_samples: 5, n_rollouts: 2, ..Default::default() };
        let r = evaluate(&cfg, &agent, &ex, &o).unwrap();
        assert_eq!(r.trajectories.z_ids().len(), 5);
        assert_eq!(r.returns.len(), 10);
        for z in &r.latents {
            let n: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatched_checkpoint_reports_dimensions() {
        let (_, ck) = trained("fourroom-rle");
        let plain = RunConfig::preset("fourroom-ppo").unwrap();
        let err = restore(&plain, &ck).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Checkpoint(_)));
        assert!(msg.contains("2 inputs") && msg.contains("shape"), "{msg}");
    }
}

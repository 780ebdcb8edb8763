use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::agent::ActorCritic;
use super::buffer::RolloutBuffer;
use super::gae::compute_gae_batch;
use super::update::ppo_update;
use crate::config::RunConfig;
use crate::envs::{AnyEnv, EnvKind, FourRoom, PointReach, PointReachParams, VecEnv};
use crate::error::{Error, Result};
use crate::explorers::{Explorer, ExplorerKind, Rle, Rnd};
use crate::metrics::VisitationGrid;
use crate::nn::{Action, AdamState, Checkpoint};
use crate::rng::{lane, stream, Stream};

/// Episodes averaged for the rolling task return.
pub const RETURN_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: u64,
    pub global_step: u64,
    pub mean_episodic_task_return: f64,
    pub mean_intrinsic_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Receives `metrics.csv`, `visitation.csv` and `checkpoints/` when set.
    pub out_dir: Option<PathBuf>,
    /// Keep every checkpoint in memory as well.
    pub keep_checkpoints: bool,
}

#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub metrics: Vec<MetricsRow>,
    pub visitation: VisitationGrid,
    pub checkpoints: Vec<(u64, Checkpoint)>,
    pub checkpoint_files: Vec<PathBuf>,
    pub agent: ActorCritic<f32>,
    pub explorer: Explorer,
    /// `(global_step, return)` of every finished episode.
    pub episodes: Vec<(u64, f64)>,
    /// Mean task return over the last completed episodes; NaN if none finished.
    pub final_score: f64,
}

pub fn build_env(cfg: &RunConfig, rng: crate::rng::Rng) -> AnyEnv {
    match cfg.env.kind {
        EnvKind::Fourroom => AnyEnv::FourRoom(FourRoom::new(cfg.env.variant, cfg.env.noisy_tv, cfg.env.horizon, rng)),
        EnvKind::Pointreach => AnyEnv::PointReach(PointReach::new(PointReachParams {
            horizon: cfg.env.horizon,
            ..PointReachParams::default()
        })),
    }
}

pub fn build_vec_env(cfg: &RunConfig, stream_kind: Stream) -> Result<VecEnv<AnyEnv>> {
    VecEnv::new(
        (0..cfg.env.workers)
            .map(|w| build_env(cfg, lane(cfg.seed, stream_kind, w)))
            .collect(),
    )
}

pub fn build_explorer(cfg: &RunConfig, obs_dim: usize) -> Result<Explorer> {
    Ok(match cfg.explorer {
        ExplorerKind::None | ExplorerKind::Noisynet => Explorer::None,
        ExplorerKind::Rle => Explorer::Rle(Box::new(Rle::new(
            cfg.rle.clone(),
            obs_dim,
            cfg.env.workers,
            cfg.seed,
            cfg.ppo.gamma,
        )?)),
        ExplorerKind::Rnd => Explorer::Rnd(Box::new(Rnd::new(
            cfg.rnd.clone(),
            obs_dim,
            cfg.env.workers,
            cfg.seed,
            cfg.ppo.gamma,
            cfg.ppo.lr,
            cfg.ppo.adam_epsilon,
            cfg.ppo.epochs,
            cfg.ppo.minibatches,
        )?)),
    })
}

pub fn build_agent(cfg: &RunConfig, input_dim: usize, space: crate::nn::ActionSpace) -> Result<ActorCritic<f32>> {
    let noisy = (cfg.explorer == ExplorerKind::Noisynet).then(|| cfg.noisynet.spec());
    ActorCritic::new(
        input_dim,
        space,
        &cfg.ppo.hidden,
        cfg.ppo.activation,
        noisy,
        &mut stream(cfg.seed, Stream::PolicyInit),
        &mut stream(cfg.seed, Stream::ValueInit),
    )
}

/// Policy inputs for every worker as one `N x input_dim` matrix.
fn policy_inputs<O: AsRef<[f64]>>(explorer: &Explorer, obs: &[O], input_dim: usize) -> Result<Array2<f32>> {
    let mut flat = Vec::with_capacity(obs.len() * input_dim);
    let mut row = Vec::with_capacity(input_dim);
    for (w, o) in obs.iter().enumerate() {
        row.clear();
        explorer.augment(o.as_ref(), w, &mut row);
        flat.extend(row.iter().map(|&v| v as f32));
    }
    Array2::from_shape_vec((obs.len(), input_dim), flat)
        .map_err(|e| Error::Shape(format!("policy input does not have width {input_dim}: {e}")))
}

/// The rows exactly as they appear in `metrics.csv`.
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn checkpoint(agent: &ActorCritic<f32>, explorer: &Explorer) -> Checkpoint {
    let mut ck = Checkpoint::default();
    agent.write_checkpoint(&mut ck);
    explorer.write_checkpoint(&mut ck);
    ck
}

pub fn checkpoint_name(global_step: u64) -> String {
    format!("step_{global_step}.ckpt")
}

fn rolling_mean(window: &VecDeque<f64>) -> f64 {
    if window.is_empty() {
        f64::NAN
    } else {
        window.iter().sum::<f64>() / window.len() as f64
    }
}

struct MetricsSink {
    writer: Option<csv::Writer<fs::File>>,
    path: PathBuf,
}

impl MetricsSink {
    fn open(dir: Option<&Path>) -> Result<Self> {
        let Some(dir) = dir else {
            return Ok(Self {
                writer: None,
                path: PathBuf::new(),
            });
        };
        let path = dir.join("metrics.csv");
        let writer = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        Ok(Self {
            writer: Some(writer),
            path,
        })
    }

    fn write(&mut self, row: &MetricsRow) -> Result<()> {
        if let Some(w) = self.writer.as_mut() {
            w.serialize(row).map_err(|e| Error::csv(&self.path, e))?;
            w.flush().map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(())
    }
}

/// Collects `T x N` steps per iteration, folds intrinsic rewards and
/// truncation bootstraps into the reward, runs GAE and the clipped update,
/// then lets the explorer post-process.
pub fn train(cfg: &RunConfig, options: &TrainOptions) -> Result<TrainArtifacts> {
    cfg.validate()?;
    let started = Instant::now();
    let (n, steps) = (cfg.env.workers, cfg.env.steps_per_batch);
    let gamma = cfg.ppo.gamma;

    let mut venv = build_vec_env(cfg, Stream::Env)?;
    let obs_dim = venv.observation_dim();
    let space = venv.action_space();
    let mut explorer = build_explorer(cfg, obs_dim)?;
    let input_dim = obs_dim + explorer.extra_obs_dim();
    let mut agent = build_agent(cfg, input_dim, space)?;
    let mut optimizer = AdamState::<f32>::new(cfg.ppo.lr, cfg.ppo.adam_epsilon);

    let mut action_rng = stream(cfg.seed, Stream::Action);
    let mut shuffle_rng = stream(cfg.seed, Stream::Shuffle);
    let mut noise_rng = stream(cfg.seed, Stream::Noise);

    let warmup = explorer.warmup_steps(n * steps);
    if warmup > 0 {
        let mut wenv = build_vec_env(cfg, Stream::Warmup)?;
        let mut wrng = stream(cfg.seed, Stream::Warmup);
        let mut seen = Vec::with_capacity(warmup);
        while seen.len() < warmup {
            let actions: Vec<Action> = (0..n).map(|_| random_action(space, &mut wrng)).collect();
            for s in wenv.step(&actions)? {
                seen.push(s.next_observation().to_vec());
            }
        }
        seen.truncate(warmup);
        explorer.observe_warmup(&seen)?;
    }

    if let Some(dir) = &options.out_dir {
        fs::create_dir_all(dir.join("checkpoints")).map_err(|e| Error::io(dir, e))?;
    }
    let mut sink = MetricsSink::open(options.out_dir.as_deref())?;

    let mut buffer = RolloutBuffer::<f32>::new(steps, n, input_dim, space);
    let mut visitation = VisitationGrid::new();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(RETURN_WINDOW);
    let mut episodes = Vec::new();
    let mut metrics = Vec::new();
    let mut checkpoints = Vec::new();
    let mut checkpoint_files = Vec::new();
    let mut next_checkpoint = 1u64;
    let mut global_step = 0u64;

    for iteration in 1..=cfg.iterations() {
        buffer.clear();
        for t in 0..steps {
            let x = policy_inputs(&explorer, venv.observations(), input_dim)?;
            if agent.is_noisy() {
                agent.resample_noise(Some(n), &mut noise_rng);
            }
            let samples = agent.act(&x, false, &mut action_rng)?;
            let values = agent.values(&x)?;
            let actions: Vec<Action> = samples.iter().map(|s| s.action.clone()).collect();
            let results = venv.step(&actions)?;
            global_step += n as u64;

            let next: Vec<&[f64]> = results.iter().map(|r| r.next_observation()).collect();
            let dones: Vec<bool> = results.iter().map(|r| r.result.done).collect();
            let intrinsic = explorer.intrinsic_rewards(&next, &dones)?;

            let cuts: Vec<bool> = (0..n)
                .map(|w| !dones[w] && explorer.cuts_trajectory(w, dones[w]))
                .collect();
            let needs_bootstrap: Vec<bool> = (0..n).map(|w| results[w].result.truncated || cuts[w]).collect();
            let bootstrap = if needs_bootstrap.iter().any(|&b| b) {
                // same per-row noise and the latent the transition was taken under
                let succ = policy_inputs(&explorer, &next, input_dim)?;
                agent.values(&succ)?
            } else {
                vec![0.0; n]
            };

            for (w, r) in results.iter().enumerate() {
                let trunc = if needs_bootstrap[w] { gamma * bootstrap[w] } else { 0.0 };
                buffer.push(
                    t,
                    w,
                    &x.row(w).iter().map(|&v| v as f64).collect::<Vec<_>>(),
                    explorer.latent(w),
                    &samples[w].action,
                    samples[w].log_prob,
                    values[w],
                    r.result.task_reward,
                    intrinsic[w],
                    trunc,
                    dones[w] || cuts[w],
                )?;
                if let Some(cell) = r.result.cell {
                    visitation.record(cell);
                }
                if let Some((ret, _)) = r.episode {
                    if window.len() == RETURN_WINDOW {
                        window.pop_front();
                    }
                    window.push_back(ret);
                    episodes.push((global_step, ret));
                }
            }
            for (w, &d) in dones.iter().enumerate() {
                explorer.on_step_end(w, d)?;
            }
        }

        let x = policy_inputs(&explorer, venv.observations(), input_dim)?;
        if agent.is_noisy() {
            agent.resample_noise(Some(n), &mut noise_rng);
        }
        buffer.bootstrap_values = agent.values(&x)?;
        let rewards = buffer.combined_rewards();
        let (advantages, returns) = compute_gae_batch(
            &rewards,
            &buffer.values,
            &buffer.dones,
            &buffer.bootstrap_values,
            gamma,
            cfg.ppo.gae_lambda,
        )?;
        let report = ppo_update(
            &mut agent,
            &mut optimizer,
            &buffer,
            &advantages,
            &returns,
            &cfg.ppo,
            &mut shuffle_rng,
            &mut noise_rng,
        )?;
        explorer.post_update(&agent.value)?;

        let row = MetricsRow {
            iteration,
            global_step,
            mean_episodic_task_return: rolling_mean(&window),
            mean_intrinsic_reward: buffer.intrinsic_rewards.iter().sum::<f64>() / buffer.len() as f64,
            policy_loss: report.policy_loss,
            value_loss: report.value_loss,
            entropy: report.entropy,
            clip_fraction: report.clip_fraction,
            grad_norm: report.grad_norm,
            wall_clock_s: if cfg.deterministic { 0.0 } else { started.elapsed().as_secs_f64() },
        };
        log::debug!(
            "iter {iteration} step {global_step} return {:.3} pg {:.4} vf {:.4}",
            row.mean_episodic_task_return,
            row.policy_loss,
            row.value_loss
        );
        sink.write(&row)?;
        metrics.push(row);

        // every tenth of the budget; the last iteration always crosses the final mark
        let mut due = false;
        while next_checkpoint <= 10 && global_step * 10 >= next_checkpoint * cfg.total_steps {
            next_checkpoint += 1;
            due = true;
        }
        if due {
            let ck = checkpoint(&agent, &explorer);
            if let Some(dir) = &options.out_dir {
                let path = dir.join("checkpoints").join(checkpoint_name(global_step));
                ck.save(&path)?;
                checkpoint_files.push(path);
            }
            if options.keep_checkpoints {
                checkpoints.push((global_step, ck));
            }
        }
    }

    if let Some(dir) = &options.out_dir {
        let path = dir.join("visitation.csv");
        fs::write(&path, visitation.to_csv()).map_err(|e| Error::io(&path, e))?;
    }

    Ok(TrainArtifacts {
        metrics,
        visitation,
        checkpoints,
        checkpoint_files,
        agent,
        explorer,
        final_score: rolling_mean(&window),
        episodes,
    })
}

pub fn random_action<R: Rng + ?Sized>(space: crate::nn::ActionSpace, rng: &mut R) -> Action {
    match space {
        crate::nn::ActionSpace::Discrete(k) => Action::Discrete(rng.random_range(0..k)),
        crate::nn::ActionSpace::Continuous(d) => Action::Continuous((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()),
    }
}

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::nn::{Action, ActionSpace, Real};

/// Actions of a batch in the layout the losses consume.
#[derive(Debug, Clone, PartialEq)]
pub enum BatchActions<T> {
    Discrete(Vec<usize>),
    Continuous(Array2<T>),
}

/// Fixed-capacity `T x N` rollout, stored time-major (`index = t * N + worker`).
#[derive(Debug, Clone)]
pub struct RolloutBuffer<T> {
    pub steps: usize,
    pub workers: usize,
    pub obs: Array2<T>,
    pub latents: Vec<Vec<f64>>,
    pub actions: BatchActions<T>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub task_rewards: Vec<f64>,
    pub intrinsic_rewards: Vec<f64>,
    /// Value of the truncated successor, already discounted, or 0.
    pub truncation_bootstrap: Vec<f64>,
    pub dones: Vec<bool>,
    /// Value of the observation following the last step, per worker.
    pub bootstrap_values: Vec<f64>,
    filled: usize,
}

impl<T: Real> RolloutBuffer<T> {
    pub fn new(steps: usize, workers: usize, obs_dim: usize, space: ActionSpace) -> Self {
        let n = steps * workers;
        let actions = match space {
            ActionSpace::Discrete(_) => BatchActions::Discrete(vec![0; n]),
            ActionSpace::Continuous(d) => BatchActions::Continuous(Array2::zeros((n, d))),
        };
        Self {
            steps,
            workers,
            obs: Array2::zeros((n, obs_dim)),
            latents: vec![Vec::new(); n],
            actions,
            log_probs: vec![0.0; n],
            values: vec![0.0; n],
            task_rewards: vec![0.0; n],
            intrinsic_rewards: vec![0.0; n],
            truncation_bootstrap: vec![0.0; n],
            dones: vec![false; n],
            bootstrap_values: vec![0.0; workers],
            filled: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.steps * self.workers
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.filled == self.len()
    }

    pub fn clear(&mut self) {
        self.filled = 0;
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        t: usize,
        worker: usize,
        obs: &[f64],
        latent: &[f64],
        action: &Action,
        log_prob: f64,
        value: f64,
        task_reward: f64,
        intrinsic_reward: f64,
        truncation_bootstrap: f64,
        done: bool,
    ) -> Result<()> {
        if t >= self.steps || worker >= self.workers || obs.len() != self.obs.ncols() {
            return Err(Error::Shape(format!(
                "rollout slot ({t}, {worker}) with {} features does not fit {}x{}x{}",
                obs.len(),
                self.steps,
                self.workers,
                self.obs.ncols()
            )));
        }
        let i = t * self.workers + worker;
        for (dst, &src) in self.obs.row_mut(i).iter_mut().zip(obs) {
            *dst = T::of(src);
        }
        self.latents[i].clear();
        self.latents[i].extend_from_slice(latent);
        match (&mut self.actions, action) {
            (BatchActions::Discrete(a), Action::Discrete(x)) => a[i] = *x,
            (BatchActions::Continuous(a), Action::Continuous(x)) if x.len() == a.ncols() => {
                for (dst, &src) in a.row_mut(i).iter_mut().zip(x) {
                    *dst = T::of(src);
                }
            }
            _ => return Err(Error::Shape("action does not match the rollout's action space".into())),
        }
        self.log_probs[i] = log_prob;
        self.values[i] = value;
        self.task_rewards[i] = task_reward;
        self.intrinsic_rewards[i] = intrinsic_reward;
        self.truncation_bootstrap[i] = truncation_bootstrap;
        self.dones[i] = done;
        self.filled += 1;
        Ok(())
    }

    /// Reward fed to GAE: task plus intrinsic plus any truncation bootstrap.
    pub fn combined_rewards(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.task_rewards[i] + self.intrinsic_rewards[i] + self.truncation_bootstrap[i])
            .collect()
    }

    pub fn gather_obs(&self, idx: &[usize]) -> Array2<T> {
        self.obs.select(ndarray::Axis(0), idx)
    }

    pub fn gather_actions(&self, idx: &[usize]) -> BatchActions<T> {
        match &self.actions {
            BatchActions::Discrete(a) => BatchActions::Discrete(idx.iter().map(|&i| a[i]).collect()),
            BatchActions::Continuous(a) => BatchActions::Continuous(a.select(ndarray::Axis(0), idx)),
        }
    }
}

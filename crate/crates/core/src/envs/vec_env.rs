use super::{Env, StepResult};
use crate::error::{Error, Result};
use crate::nn::{Action, ActionSpace};

/// Per-worker outcome of a vectorised step.
#[derive(Debug, Clone, PartialEq)]
pub struct VecStep {
    /// `observation` is already the post-reset observation when `done`.
    pub result: StepResult,
    /// Pre-reset observation of a finished episode.
    pub terminal_observation: Option<Vec<f64>>,
    /// `(return, length)` of a finished episode.
    pub episode: Option<(f64, usize)>,
}

impl VecStep {
    /// Observation reached by the transition, before any auto-reset.
    pub fn next_observation(&self) -> &[f64] {
        self.terminal_observation.as_deref().unwrap_or(&self.result.observation)
    }
}

/// Independent workers stepped in lockstep; finished workers reset themselves.
#[derive(Debug, Clone)]
pub struct VecEnv<E> {
    workers: Vec<E>,
    observations: Vec<Vec<f64>>,
    returns: Vec<f64>,
    lengths: Vec<usize>,
}

impl<E: Env> VecEnv<E> {
    pub fn new(mut workers: Vec<E>) -> Result<Self> {
        if workers.is_empty() {
            return Err(Error::Config("a vectorised environment needs at least one worker".into()));
        }
        let observations = workers.iter_mut().map(|w| w.reset()).collect();
        let n = workers.len();
        Ok(Self {
            workers,
            observations,
            returns: vec![0.0; n],
            lengths: vec![0; n],
        })
    }

    pub fn num_workers(&self) -> usize {
        self.workers.len()
    }

    pub fn observation_dim(&self) -> usize {
        self.workers[0].observation_dim()
    }

    pub fn action_space(&self) -> ActionSpace {
        self.workers[0].action_space()
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.observations
    }

    pub fn worker(&self, i: usize) -> &E {
        &self.workers[i]
    }

    pub fn step(&mut self, actions: &[Action]) -> Result<Vec<VecStep>> {
        if actions.len() != self.workers.len() {
            return Err(Error::Usage(format!(
                "{} actions for {} workers",
                actions.len(),
                self.workers.len()
            )));
        }
        let mut out = Vec::with_capacity(actions.len());
        for (i, (w, a)) in self.workers.iter_mut().zip(actions).enumerate() {
            let mut result = w.step(a)?;
            self.returns[i] += result.task_reward;
            self.lengths[i] += 1;
            let (terminal_observation, episode) = if result.done {
                let terminal = std::mem::replace(&mut result.observation, w.reset());
                let ep = (self.returns[i], self.lengths[i]);
                self.returns[i] = 0.0;
                self.lengths[i] = 0;
                (Some(terminal), Some(ep))
            } else {
                (None, None)
            };
            self.observations[i] = result.observation.clone();
            out.push(VecStep {
                result,
                terminal_observation,
                episode,
            });
        }
        Ok(out)
    }
}

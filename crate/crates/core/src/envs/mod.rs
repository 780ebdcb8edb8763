//! Environments: the FourRoom gridworld family and a continuous point-reach task,
//! plus a synchronous vectorised wrapper.

pub mod fourroom;
pub mod layout;
pub mod pointreach;
pub mod vec_env;

use serde::{Deserialize, Serialize};

pub use fourroom::{FourRoom, FourRoomState, FourRoomVariant};
pub use layout::{Cell, GridLayout, GRID};
pub use pointreach::{PointReach, PointReachParams};
pub use vec_env::{VecEnv, VecStep};

use crate::error::Result;
use crate::nn::{Action, ActionSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub task_reward: f64,
    /// Episode over, for any reason.
    pub done: bool,
    /// Episode over because the horizon was hit.
    pub truncated: bool,
    /// Grid cell occupied after the step.
    pub cell: Option<Cell>,
}

impl StepResult {
    pub fn terminated(&self) -> bool {
        self.done && !self.truncated
    }
}

pub trait Env: Send {
    fn observation_dim(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: &Action) -> Result<StepResult>;
    fn cell(&self) -> Option<Cell>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Fourroom,
    Pointreach,
}

/// Closed set of environments selectable from configuration.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    FourRoom(FourRoom),
    PointReach(PointReach),
}

impl Env for AnyEnv {
    fn observation_dim(&self) -> usize {
        match self {
            AnyEnv::FourRoom(e) => e.observation_dim(),
            AnyEnv::PointReach(e) => e.observation_dim(),
        }
    }

    fn action_space(&self) -> ActionSpace {
        match self {
            AnyEnv::FourRoom(e) => e.action_space(),
            AnyEnv::PointReach(e) => e.action_space(),
        }
    }

    fn reset(&mut self) -> Vec<f64> {
        match self {
            AnyEnv::FourRoom(e) => e.reset(),
            AnyEnv::PointReach(e) => e.reset(),
        }
    }

    fn step(&mut self, action: &Action) -> Result<StepResult> {
        match self {
            AnyEnv::FourRoom(e) => e.step(action),
            AnyEnv::PointReach(e) => e.step(action),
        }
    }

    fn cell(&self) -> Option<Cell> {
        match self {
            AnyEnv::FourRoom(e) => e.cell(),
            AnyEnv::PointReach(e) => e.cell(),
        }
    }
}

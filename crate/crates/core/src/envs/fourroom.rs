use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layout::{Cell, GridLayout, GRID};
use super::{Env, StepResult};
use crate::error::{Error, Result};
use crate::nn::{Action, ActionSpace};
use crate::rng::Rng as StreamRng;

pub const DEFAULT_HORIZON: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourRoomVariant {
    /// Reward 1 and termination on entering the goal.
    Sparse,
    /// Reward always 0; episodes end only at the horizon.
    RewardFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Left,
    Right,
    Up,
    Down,
}

impl Move {
    pub fn from_index(a: usize) -> Result<Self> {
        Ok(match a {
            0 => Move::Left,
            1 => Move::Right,
            2 => Move::Up,
            3 => Move::Down,
            _ => return Err(Error::Usage(format!("FourRoom action {a} out of range"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourRoomState {
    pub row: usize,
    pub col: usize,
    pub steps_elapsed: usize,
}

impl FourRoomState {
    pub fn cell(&self) -> Cell {
        (self.row, self.col)
    }
}

/// Outcome of a single transition, before any observation is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: FourRoomState,
    pub task_reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

/// Moves one cell unless the target is a wall or off-grid.
pub fn fourroom_step(
    state: FourRoomState,
    mv: Move,
    layout: &GridLayout,
    variant: FourRoomVariant,
    horizon: usize,
) -> Transition {
    let (r, c) = (state.row, state.col);
    let target = match mv {
        Move::Left => c.checked_sub(1).map(|c| (r, c)),
        Move::Right => (c + 1 < GRID).then_some((r, c + 1)),
        Move::Up => r.checked_sub(1).map(|r| (r, c)),
        Move::Down => (r + 1 < GRID).then_some((r + 1, c)),
    };
    let (row, col) = match target {
        Some(t) if !layout.is_wall(t) => t,
        _ => (r, c),
    };
    let steps_elapsed = state.steps_elapsed + 1;
    let at_goal = (row, col) == layout.goal;
    let (task_reward, terminated) = match variant {
        FourRoomVariant::Sparse if at_goal => (1.0, true),
        _ => (0.0, false),
    };
    Transition {
        state: FourRoomState { row, col, steps_elapsed },
        task_reward,
        terminated,
        truncated: !terminated && steps_elapsed >= horizon,
    }
}

/// `(col/49, row/49)`; inside the NoisyTV square uniform `[0,1]²` noise is added.
pub fn fourroom_observe<R: Rng + ?Sized>(
    state: &FourRoomState,
    layout: &GridLayout,
    noisy_tv: bool,
    rng: &mut R,
) -> Vec<f64> {
    let scale = (GRID - 1) as f64;
    let mut obs = vec![state.col as f64 / scale, state.row as f64 / scale];
    if noisy_tv && layout.in_noisy_tv(state.cell()) {
        obs[0] += rng.random::<f64>();
        obs[1] += rng.random::<f64>();
    }
    obs
}

#[derive(Debug, Clone)]
pub struct FourRoom {
    pub layout: GridLayout,
    pub variant: FourRoomVariant,
    pub noisy_tv: bool,
    pub horizon: usize,
    state: FourRoomState,
    rng: StreamRng,
}

impl FourRoom {
    pub fn new(variant: FourRoomVariant, noisy_tv: bool, horizon: usize, rng: StreamRng) -> Self {
        let layout = GridLayout::canonical();
        let state = FourRoomState {
            row: layout.start.0,
            col: layout.start.1,
            steps_elapsed: 0,
        };
        Self {
            layout,
            variant,
            noisy_tv,
            horizon,
            state,
            rng,
        }
    }

    pub fn state(&self) -> FourRoomState {
        self.state
    }

    fn observe(&mut self) -> Vec<f64> {
        fourroom_observe(&self.state, &self.layout, self.noisy_tv, &mut self.rng)
    }
}

impl Env for FourRoom {
    fn observation_dim(&self) -> usize {
        2
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(4)
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = FourRoomState {
            row: self.layout.start.0,
            col: self.layout.start.1,
            steps_elapsed: 0,
        };
        self.observe()
    }

    fn step(&mut self, action: &Action) -> Result<StepResult> {
        let mv = match action {
            Action::Discrete(a) => Move::from_index(*a)?,
            Action::Continuous(_) => return Err(Error::Usage("FourRoom takes discrete actions".into())),
        };
        let t = fourroom_step(self.state, mv, &self.layout, self.variant, self.horizon);
        self.state = t.state;
        Ok(StepResult {
            observation: self.observe(),
            task_reward: t.task_reward,
            done: t.terminated || t.truncated,
            truncated: t.truncated,
            cell: Some(t.state.cell()),
        })
    }

    fn cell(&self) -> Option<Cell> {
        Some(self.state.cell())
    }
}

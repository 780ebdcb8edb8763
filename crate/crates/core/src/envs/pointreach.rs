//! Damped double integrator in the plane; the agent pushes a point mass toward a fixed target.

use super::layout::{Cell, GRID};
use super::{Env, StepResult};
use crate::error::{Error, Result};
use crate::nn::{Action, ActionSpace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointReachParams {
    pub dt: f64,
    pub damping: f64,
    pub horizon: usize,
    pub start: [f64; 2],
    pub target: [f64; 2],
}

impl Default for PointReachParams {
    fn default() -> Self {
        Self {
            dt: 0.05,
            damping: 1.0,
            horizon: 200,
            start: [0.0, 0.0],
            target: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub steps_elapsed: usize,
}

/// Semi-implicit Euler: `v' = v + dt·(a − damping·v)`, `p' = p + dt·v'`.
/// Reward is `−‖p' − target‖·dt`.
pub fn pointreach_step(state: PointState, action: [f64; 2], p: &PointReachParams) -> (PointState, f64, bool) {
    let a = action.map(|x| x.clamp(-1.0, 1.0));
    let mut next = state;
    for d in 0..2 {
        next.vel[d] = state.vel[d] + p.dt * (a[d] - p.damping * state.vel[d]);
        next.pos[d] = state.pos[d] + p.dt * next.vel[d];
    }
    next.steps_elapsed += 1;
    let dx = next.pos[0] - p.target[0];
    let dy = next.pos[1] - p.target[1];
    let reward = -(dx * dx + dy * dy).sqrt() * p.dt;
    (next, reward, next.steps_elapsed >= p.horizon)
}

#[derive(Debug, Clone)]
pub struct PointReach {
    pub params: PointReachParams,
    state: PointState,
}

impl PointReach {
    pub fn new(params: PointReachParams) -> Self {
        let state = PointState {
            pos: params.start,
            vel: [0.0; 2],
            steps_elapsed: 0,
        };
        Self { params, state }
    }

    pub fn state(&self) -> PointState {
        self.state
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.state.pos[0], self.state.pos[1], self.state.vel[0], self.state.vel[1]]
    }

    /// Position binned onto a 50x50 grid over `[-0.5, 1.5]²` for heatmaps.
    pub fn bin(pos: [f64; 2]) -> Cell {
        let b = |x: f64| (((x + 0.5) / 2.0 * GRID as f64).floor().max(0.0) as usize).min(GRID - 1);
        (GRID - 1 - b(pos[1]), b(pos[0]))
    }
}

impl Env for PointReach {
    fn observation_dim(&self) -> usize {
        4
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous(2)
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = PointState {
            pos: self.params.start,
            vel: [0.0; 2],
            steps_elapsed: 0,
        };
        self.observe()
    }

    fn step(&mut self, action: &Action) -> Result<StepResult> {
        let a = match action {
            Action::Continuous(v) if v.len() == 2 => [v[0], v[1]],
            _ => return Err(Error::Usage("PointReach takes a 2-d continuous action".into())),
        };
        let (next, reward, truncated) = pointreach_step(self.state, a, &self.params);
        self.state = next;
        Ok(StepResult {
            observation: self.observe(),
            task_reward: reward,
            done: truncated,
            truncated,
            cell: Some(Self::bin(next.pos)),
        })
    }

    fn cell(&self) -> Option<Cell> {
        Some(Self::bin(self.state.pos))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_with_zero_action_stays_put() {
        let p = PointReachParams::default();
        let s = PointState { pos: [0.0, 0.0], vel: [0.0; 2], steps_elapsed: 0 };
        let (n, r, _) = pointreach_step(s, [0.0, 0.0], &p);
        assert_eq!(n.pos, s.pos);
        let d0 = 2f64.sqrt();
        assert!((r + d0 * p.dt).abs() < 1e-15);
    }

    #[test]
    fn at_target_zero_reward() {
        let p = PointReachParams::default();
        let s = PointState { pos: p.target, vel: [0.0; 2], steps_elapsed: 0 };
        let (_, r, _) = pointreach_step(s, [0.0, 0.0], &p);
        assert_eq!(r, 0.0);
    }

    /// Closed form of the constant-force recurrence with c = 1 − damping·dt:
    /// v_n = cⁿv₀ + a·dt(1−cⁿ)/(1−c),
    /// p_n = p₀ + dt[v₀c(1−cⁿ)/(1−c) + a·dt(n − c(1−cⁿ)/(1−c))/(1−c)].
    #[test]
    fn constant_force_matches_closed_form() {
        let p = PointReachParams::default();
        let a = [0.7, -0.4];
        let v0 = [0.2, 0.5];
        let p0 = [0.1, -0.3];
        let mut s = PointState { pos: p0, vel: v0, steps_elapsed: 0 };
        let c = 1.0 - p.damping * p.dt;
        for n in 1..=p.horizon {
            let (next, _, done) = pointreach_step(s, a, &p);
            s = next;
            let cn = c.powi(n as i32);
            let g = (1.0 - cn) / (1.0 - c);
            for d in 0..2 {
                let v = cn * v0[d] + a[d] * p.dt * g;
                let x = p0[d] + p.dt * (v0[d] * c * g + a[d] * p.dt * (n as f64 - c * g) / (1.0 - c));
                assert!((s.vel[d] - v).abs() < 1e-10, "step {n} vel");
                assert!((s.pos[d] - x).abs() < 1e-10, "step {n} pos");
            }
            assert_eq!(done, n == p.horizon);
        }
    }

    #[test]
    fn actions_are_clipped() {
        let p = PointReachParams::default();
        let s = PointState { pos: [0.0; 2], vel: [0.0; 2], steps_elapsed: 0 };
        let (a, _, _) = pointreach_step(s, [5.0, -9.0], &p);
        let (b, _, _) = pointreach_step(s, [1.0, -1.0], &p);
        assert_eq!(a, b);
    }
}

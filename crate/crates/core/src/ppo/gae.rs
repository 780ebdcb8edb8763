use crate::error::{Error, Result};

/// Generalised advantage estimation over one worker's trajectory.
///
/// `dones[t]` marks that the episode ended after step `t`, so `values[t+1]`
/// (or `bootstrap_value` at the end) is not used to bootstrap step `t`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    gae_lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::Usage(format!(
            "GAE inputs disagree in length: rewards {n}, values {}, dones {}",
            values.len(),
            dones.len()
        )));
    }
    let mut advantages = vec![0.0; n];
    let mut last = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        last = delta + gamma * gae_lambda * live * last;
        advantages[t] = last;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

/// GAE over a time-major `T x N` layout (`index = t * num_workers + worker`).
pub fn compute_gae_batch(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_values: &[f64],
    gamma: f64,
    gae_lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let workers = bootstrap_values.len();
    let len = rewards.len();
    if workers == 0 || len % workers != 0 || values.len() != len || dones.len() != len {
        return Err(Error::Usage(format!(
            "batched GAE expects T x {workers} arrays, got {len} rewards, {} values, {} dones",
            values.len(),
            dones.len()
        )));
    }
    let steps = len / workers;
    let mut advantages = vec![0.0; len];
    let mut returns = vec![0.0; len];
    let column = |xs: &[f64], w: usize| (0..steps).map(|t| xs[t * workers + w]).collect::<Vec<_>>();
    for w in 0..workers {
        let d: Vec<bool> = (0..steps).map(|t| dones[t * workers + w]).collect();
        let (a, r) = compute_gae(&column(rewards, w), &column(values, w), &d, bootstrap_values[w], gamma, gae_lambda)?;
        for t in 0..steps {
            advantages[t * workers + w] = a[t];
            returns[t * workers + w] = r[t];
        }
    }
    Ok((advantages, returns))
}

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;

use super::agent::ActorCritic;
use super::buffer::{BatchActions, RolloutBuffer};
use super::PpoConfig;
use crate::error::{Error, Result};
use crate::nn::{clip_grad_norm, AdamState, CategoricalBatch, GaussianBatch, Real};

/// Training batch slice used by one gradient step.
#[derive(Debug, Clone)]
pub struct Minibatch<T> {
    pub obs: Array2<T>,
    pub actions: BatchActions<T>,
    pub old_log_probs: Vec<f64>,
    pub old_values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    pub approx_kl: f64,
}

/// Advantages rescaled to zero mean and unit (population) standard deviation.
pub fn normalize_advantages(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    adv.iter().map(|a| (a - mean) / (std + 1e-8)).collect()
}

/// Clipped-surrogate, value and entropy terms of one minibatch. Gradients of
/// the total loss are accumulated into the agent's parameters.
pub fn minibatch_loss<T: Real>(agent: &mut ActorCritic<T>, mb: &Minibatch<T>, cfg: &PpoConfig) -> Result<LossReport> {
    let b = mb.obs.nrows();
    if b == 0 {
        return Err(Error::Usage("empty minibatch".into()));
    }
    let bf = b as f64;
    let adv = if cfg.advantage_normalization {
        normalize_advantages(&mb.advantages)
    } else {
        mb.advantages.clone()
    };

    let head = agent.policy.forward(&mb.obs)?;
    let (new_logp, entropy): (Array1<T>, Array1<T>) = match (&mb.actions, &agent.log_std) {
        (BatchActions::Discrete(a), None) => {
            let d = CategoricalBatch::from_logits(&head)?;
            (d.log_prob_of(a), d.entropy())
        }
        (BatchActions::Continuous(a), Some(ls)) => {
            let d = GaussianBatch { mean: &head, log_std: &ls.values };
            (d.log_prob_of(a), d.entropy())
        }
        _ => return Err(Error::Shape("actions do not match the agent's action space".into())),
    };

    let eps = cfg.clip_coef;
    let mut policy_loss = 0.0;
    let mut clipped = 0usize;
    let mut approx_kl = 0.0;
    let mut dlogp = Array1::<T>::zeros(b);
    for i in 0..b {
        let log_ratio = new_logp[i].f64() - mb.old_log_probs[i];
        let ratio = log_ratio.exp();
        let clipped_ratio = ratio.clamp(1.0 - eps, 1.0 + eps);
        let unclipped_obj = adv[i] * ratio;
        let clipped_obj = adv[i] * clipped_ratio;
        policy_loss += -unclipped_obj.min(clipped_obj);
        if (ratio - 1.0).abs() > eps {
            clipped += 1;
        }
        approx_kl += (ratio - 1.0) - log_ratio;
        if unclipped_obj <= clipped_obj {
            dlogp[i] = T::of(-adv[i] * ratio / bf);
        }
    }
    policy_loss /= bf;
    let mean_entropy = entropy.iter().map(|h| h.f64()).sum::<f64>() / bf;
    let dent = Array1::from_elem(b, T::of(-cfg.entropy_weight / bf));

    let head_grad = match (&mb.actions, &mut agent.log_std) {
        (BatchActions::Discrete(a), None) => CategoricalBatch::from_logits(&head)?.grad_logits(a, &dlogp, &dent),
        (BatchActions::Continuous(a), Some(ls)) => {
            let (gm, gs) = GaussianBatch { mean: &head, log_std: &ls.values }.grads(a, &dlogp, &dent);
            ls.grads += &gs;
            gm
        }
        _ => unreachable!("checked above"),
    };
    agent.policy.backward(&head_grad)?;

    let v = agent.value.forward(&mb.obs)?;
    let mut value_loss = 0.0;
    let mut dv = Array2::<T>::zeros((b, 1));
    for i in 0..b {
        let vi = v[[i, 0]].f64();
        let err = vi - mb.returns[i];
        let g = if cfg.clipped_value_loss {
            let delta = vi - mb.old_values[i];
            let vc = mb.old_values[i] + delta.clamp(-eps, eps);
            let err_c = vc - mb.returns[i];
            if err * err >= err_c * err_c {
                value_loss += err * err;
                err
            } else {
                value_loss += err_c * err_c;
                if delta.abs() < eps {
                    err_c
                } else {
                    0.0
                }
            }
        } else {
            value_loss += err * err;
            err
        };
        // d/dv of value_weight * 0.5 * mean(sq)
        dv[[i, 0]] = T::of(cfg.value_weight * g / bf);
    }
    value_loss = 0.5 * value_loss / bf;
    agent.value.backward(&dv)?;

    let total = policy_loss + cfg.value_weight * value_loss - cfg.entropy_weight * mean_entropy;
    if !total.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite loss (policy {policy_loss}, value {value_loss}, entropy {mean_entropy})"
        )));
    }
    Ok(LossReport {
        policy_loss,
        value_loss,
        entropy: mean_entropy,
        clip_fraction: clipped as f64 / bf,
        grad_norm: 0.0,
        approx_kl: approx_kl / bf,
    })
}

/// Total scalar loss of a minibatch without touching gradients.
pub fn total_loss<T: Real>(agent: &mut ActorCritic<T>, mb: &Minibatch<T>, cfg: &PpoConfig) -> Result<f64> {
    let r = minibatch_loss(agent, mb, cfg)?;
    agent.zero_grad();
    Ok(r.policy_loss + cfg.value_weight * r.value_loss - cfg.entropy_weight * r.entropy)
}

/// Epochs of shuffled minibatch updates over a full rollout.
pub fn ppo_update<T: Real, R: Rng + ?Sized>(
    agent: &mut ActorCritic<T>,
    optimizer: &mut AdamState<T>,
    buffer: &RolloutBuffer<T>,
    advantages: &[f64],
    returns: &[f64],
    cfg: &PpoConfig,
    shuffle_rng: &mut R,
    noise_rng: &mut R,
) -> Result<LossReport> {
    if !buffer.is_full() {
        return Err(Error::Usage("PPO update requires a full rollout buffer".into()));
    }
    let n = buffer.len();
    if cfg.minibatches == 0 || n % cfg.minibatches != 0 {
        return Err(Error::Config(format!(
            "{n} samples do not split into {} minibatches",
            cfg.minibatches
        )));
    }
    let size = n / cfg.minibatches;
    let mut order: Vec<usize> = (0..n).collect();
    let mut sum = LossReport::default();
    let mut count = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(shuffle_rng);
        for idx in order.chunks(size) {
            let mb = Minibatch {
                obs: buffer.gather_obs(idx),
                actions: buffer.gather_actions(idx),
                old_log_probs: idx.iter().map(|&i| buffer.log_probs[i]).collect(),
                old_values: idx.iter().map(|&i| buffer.values[i]).collect(),
                advantages: idx.iter().map(|&i| advantages[i]).collect(),
                returns: idx.iter().map(|&i| returns[i]).collect(),
            };
            if agent.is_noisy() {
                agent.resample_noise(None, noise_rng);
            }
            let mut r = minibatch_loss(agent, &mb, cfg)?;
            let mut params = agent.params_mut();
            r.grad_norm = clip_grad_norm(&mut params, cfg.grad_norm_bound);
            optimizer.step(&mut params)?;
            sum.policy_loss += r.policy_loss;
            sum.value_loss += r.value_loss;
            sum.entropy += r.entropy;
            sum.clip_fraction += r.clip_fraction;
            sum.grad_norm += r.grad_norm;
            sum.approx_kl += r.approx_kl;
            count += 1.0;
        }
    }
    agent.clear_noise();
    Ok(LossReport {
        policy_loss: sum.policy_loss / count,
        value_loss: sum.value_loss / count,
        entropy: sum.entropy / count,
        clip_fraction: sum.clip_fraction / count,
        grad_norm: sum.grad_norm / count,
        approx_kl: sum.approx_kl / count,
    })
}

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{
    Action, ActionSpace, Activation, Categorical, Checkpoint, DiagGaussian, Mlp, MlpSpec, NoisySpec, ParamTensor, Real,
};

/// Separate policy and value MLPs, plus a state-independent log-std row for
/// continuous actions.
#[derive(Debug, Clone)]
pub struct ActorCritic<T> {
    pub policy: Mlp<T>,
    pub value: Mlp<T>,
    pub log_std: Option<ParamTensor<T>>,
    pub action_space: ActionSpace,
}

/// One sampled action with its log-probability under the sampling policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ActSample {
    pub action: Action,
    pub log_prob: f64,
}

impl<T: Real> ActorCritic<T> {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        action_space: ActionSpace,
        hidden: &[usize],
        activation: Activation,
        noisy: Option<NoisySpec>,
        policy_rng: &mut R,
        value_rng: &mut R,
    ) -> Result<Self> {
        let mut pw = hidden.to_vec();
        pw.push(action_space.head_dim());
        let mut vw = hidden.to_vec();
        vw.push(1);
        let policy = Mlp::new(MlpSpec::new(input_dim, &pw, activation), 2f64.sqrt(), 0.01, noisy, policy_rng)?;
        let value = Mlp::new(MlpSpec::new(input_dim, &vw, activation), 2f64.sqrt(), 1.0, noisy, value_rng)?;
        let log_std = match action_space {
            ActionSpace::Continuous(n) => Some(ParamTensor::zeros(1, n)),
            ActionSpace::Discrete(_) => None,
        };
        Ok(Self {
            policy,
            value,
            log_std,
            action_space,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn is_noisy(&self) -> bool {
        self.policy.is_noisy() || self.value.is_noisy()
    }

    /// Fresh noise for both networks: one draw per row when `rows` is set,
    /// otherwise a single draw for the whole batch.
    pub fn resample_noise<R: Rng + ?Sized>(&mut self, rows: Option<usize>, rng: &mut R) {
        self.policy.resample_noise(rows, rng);
        self.value.resample_noise(rows, rng);
    }

    pub fn clear_noise(&mut self) {
        self.policy.clear_noise();
        self.value.clear_noise();
    }

    pub fn values(&self, obs: &Array2<T>) -> Result<Vec<f64>> {
        Ok(self.value.predict(obs)?.iter().map(|v| v.f64()).collect())
    }

    fn log_std_row(&self) -> Vec<f64> {
        self.log_std
            .as_ref()
            .map(|p| p.values.iter().map(|v| v.f64()).collect())
            .unwrap_or_default()
    }

    /// Samples one action per row, or takes the mode when `greedy`.
    pub fn act<R: Rng + ?Sized>(&self, obs: &Array2<T>, greedy: bool, rng: &mut R) -> Result<Vec<ActSample>> {
        let head = self.policy.predict(obs)?;
        let log_std = self.log_std_row();
        head.rows()
            .into_iter()
            .map(|row| {
                let row: Vec<f64> = row.iter().map(|v| v.f64()).collect();
                Ok(match self.action_space {
                    ActionSpace::Discrete(_) => {
                        let dist = Categorical::from_logits(&row)?;
                        let a = if greedy { dist.mode() } else { dist.sample(rng) };
                        ActSample {
                            log_prob: dist.log_prob(a),
                            action: Action::Discrete(a),
                        }
                    }
                    ActionSpace::Continuous(_) => {
                        let dist = DiagGaussian::new(row, log_std.clone())?;
                        let a = if greedy { dist.mean.clone() } else { dist.sample(rng) };
                        ActSample {
                            log_prob: dist.log_prob(&a),
                            action: Action::Continuous(a),
                        }
                    }
                })
            })
            .collect()
    }

    /// Every trainable tensor, in a fixed order shared by the optimiser.
    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor<T>> {
        let mut out = self.policy.params_mut();
        out.extend(self.value.params_mut());
        if let Some(ls) = self.log_std.as_mut() {
            out.push(ls);
        }
        out
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(|p| p.zero_grad());
    }

    /// Same parameters in another precision.
    pub fn cast<U: Real>(&self) -> ActorCritic<U> {
        ActorCritic {
            policy: self.policy.cast(),
            value: self.value.cast(),
            log_std: self.log_std.as_ref().map(|p| p.cast()),
            action_space: self.action_space,
        }
    }

    pub fn write_checkpoint(&self, ckpt: &mut Checkpoint) {
        ckpt.push_mlp("policy", &self.policy);
        ckpt.push_mlp("value", &self.value);
        if let Some(ls) = &self.log_std {
            ckpt.push("log_std", ls);
        }
    }

    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        ckpt.load_mlp("policy", &mut self.policy)?;
        ckpt.load_mlp("value", &mut self.value)?;
        match (&mut self.log_std, ckpt.get("log_std")) {
            (Some(ls), Some(_)) => ckpt.load_param("log_std", ls),
            (None, None) => Ok(()),
            _ => Err(Error::Checkpoint(
                "checkpoint and configuration disagree on the action space".into(),
            )),
        }
    }
}

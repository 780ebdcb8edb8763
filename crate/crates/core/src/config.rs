//! Run configuration: JSON with preset inheritance and dot-path overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::envs::{EnvKind, FourRoomVariant};
use crate::error::{Error, Result};
use crate::explorers::{ExplorerKind, LatentDistribution, NoisyNetConfig, RewardVariant, RleConfig, RndConfig};
use crate::ppo::PpoConfig;

pub const PRESETS: &[&str] = &[
    "fourroom-ppo",
    "fourroom-rle",
    "fourroom-rnd",
    "fourroom-noisynet",
    "fourroom-rle-atari-style",
    "pointreach-ppo",
    "pointreach-rle",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub variant: FourRoomVariant,
    pub noisy_tv: bool,
    pub horizon: usize,
    pub workers: usize,
    pub steps_per_batch: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            kind: EnvKind::Fourroom,
            variant: FourRoomVariant::Sparse,
            noisy_tv: false,
            horizon: crate::envs::fourroom::DEFAULT_HORIZON,
            workers: 32,
            steps_per_batch: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub explorer: ExplorerKind,
    pub rle: RleConfig,
    pub rnd: RndConfig,
    pub noisynet: NoisyNetConfig,
    pub ppo: PpoConfig,
    pub total_steps: u64,
    pub seed: u64,
    pub output_dir: Option<String>,
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            explorer: ExplorerKind::None,
            rle: RleConfig::default(),
            rnd: RndConfig::default(),
            noisynet: NoisyNetConfig::default(),
            ppo: PpoConfig::default(),
            total_steps: 2_500_000,
            seed: 0,
            output_dir: None,
            deterministic: false,
        }
    }
}

impl RunConfig {
    pub fn batch_size(&self) -> usize {
        self.env.workers * self.env.steps_per_batch
    }

    /// Number of rollout/update iterations; the last one may overshoot `total_steps`.
    pub fn iterations(&self) -> u64 {
        self.total_steps.div_ceil(self.batch_size() as u64).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.env.workers == 0 || self.env.steps_per_batch == 0 || self.env.horizon == 0 {
            return Err(Error::Config("env.workers, env.steps_per_batch and env.horizon must be positive".into()));
        }
        if self.batch_size() % self.ppo.minibatches.max(1) != 0 {
            return Err(Error::Config(format!(
                "batch of {} samples does not split into {} minibatches",
                self.batch_size(),
                self.ppo.minibatches
            )));
        }
        if self.total_steps == 0 {
            return Err(Error::Config("total_steps must be positive".into()));
        }
        self.ppo.validate()?;
        self.rle.validate()?;
        self.rnd.validate()?;
        if self.noisynet.sigma_init < 0.0 || self.noisynet.layers == 0 {
            return Err(Error::Config("noisynet.sigma_init must be non-negative and noisynet.layers positive".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }

    /// Resolves presets and overrides, then type-checks every key.
    pub fn from_value(value: Value, overrides: &[String]) -> Result<Self> {
        let mut v = resolve(value)?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(v).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("at key `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str, overrides: &[String]) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        Self::from_value(v, overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, overrides)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_value(json!({ "preset": name }), &[])
    }
}

/// Recursively overlays `patch` onto `base`.
pub fn deep_merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn resolve(mut value: Value) -> Result<Value> {
    let Value::Object(ref mut map) = value else {
        return Err(Error::Config("configuration must be a JSON object".into()));
    };
    let mut base = match map.remove("preset") {
        None => serde_json::to_value(RunConfig::default())?,
        Some(Value::String(name)) => preset_value(&name)?,
        Some(other) => return Err(Error::Config(format!("at key `preset`: expected a name, got {other}"))),
    };
    deep_merge(&mut base, value);
    Ok(base)
}

fn preset_value(name: &str) -> Result<Value> {
    let mut v = serde_json::to_value(RunConfig::default())?;
    let patch = match name {
        "fourroom-ppo" => json!({}),
        "fourroom-rle" => json!({ "explorer": "rle" }),
        "fourroom-rnd" => json!({ "explorer": "rnd" }),
        "fourroom-noisynet" => json!({ "explorer": "noisynet" }),
        // standardised unit-norm features, slow φ tracking, long latents that cut trajectories
        "fourroom-rle-atari-style" => json!({
            "explorer": "rle",
            "rle": {
                "standardize_features": true,
                "include_prev_reward": true,
                "tau": 0.005,
                "resample_interval": 1280,
                "episodic_cut": true,
                "feature_hidden": [64, 64],
            }
        }),
        "pointreach-ppo" => pointreach_patch(),
        "pointreach-rle" => {
            let mut p = pointreach_patch();
            deep_merge(
                &mut p,
                json!({
                    "explorer": "rle",
                    "rle": {
                        "variant": RewardVariant::StandardizedDot,
                        "distribution": LatentDistribution::Sphere,
                        "standardize_features": true,
                        "reward_normalization": true,
                        "tau": 0.005,
                        "resample_interval": 16,
                        "lambda_F": 0.01,
                        "feature_hidden": [64, 64],
                        "feature_activation": "tanh",
                    }
                }),
            );
            p
        }
        other => {
            return Err(Error::Config(format!(
                "at key `preset`: unknown preset {other:?} (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    deep_merge(&mut v, patch);
    Ok(v)
}

fn pointreach_patch() -> Value {
    json!({
        "env": { "kind": "pointreach", "horizon": 200 },
        "ppo": { "entropy_weight": 0.0 },
        "total_steps": 2_000_000,
    })
}

/// Applies `a.b.c=value`; the value is parsed as JSON when possible and
/// taken as a string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override key {path:?} is malformed")));
    }
    let mut cur = root;
    for (i, k) in keys.iter().enumerate() {
        let Value::Object(map) = cur else {
            return Err(Error::Config(format!(
                "at key `{}`: not an object",
                keys[..i].join(".")
            )));
        };
        if i + 1 == keys.len() {
            map.insert(k.to_string(), value);
            return Ok(());
        }
        cur = map.entry(k.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("non-empty key path")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in PRESETS {
            let c = RunConfig::preset(p).unwrap();
            c.validate().unwrap();
        }
        let rle = RunConfig::preset("fourroom-rle").unwrap();
        assert_eq!(rle.explorer, ExplorerKind::Rle);
        assert_eq!(rle.rle.lambda_f, 0.1);
        assert_eq!(rle.rle.dim, 4);
        assert_eq!(rle.rle.feature_hidden, vec![64, 64, 64]);
        assert_eq!(rle.ppo.lr, 1e-3);
        assert_eq!(rle.total_steps, 2_500_000);
        assert_eq!(rle.batch_size(), 4096);
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfig::from_json_str(
            r#"{"preset": "fourroom-rle", "seed": 3}"#,
            &["rle.dim=8".into(), "env.variant=reward_free".into(), "total_steps=4096".into()],
        )
        .unwrap();
        assert_eq!(c.rle.dim, 8);
        assert_eq!(c.env.variant, FourRoomVariant::RewardFree);
        assert_eq!(c.seed, 3);
        assert_eq!(c.iterations(), 1);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_json_str(r#"{"rle": {"dimm": 3}}"#, &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dimm"), "{msg}");
        let err = RunConfig::from_json_str("{}", &["ppo.gama=0.5".into()]).unwrap_err();
        assert!(err.to_string().contains("gama"));
        let err = RunConfig::from_json_str(r#"{"ppo": {"gamma": "high"}}"#, &[]).unwrap_err();
        assert!(err.to_string().contains("ppo.gamma"), "{err}");
    }

    #[test]
    fn unknown_preset() {
        let err = RunConfig::preset("atari-full").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_json_str("{}", &["ppo.minibatches=3".into()]).is_err());
        assert!(RunConfig::from_json_str("{}", &["ppo.gamma=1.5".into()]).is_err());
        assert!(RunConfig::from_json_str("{}", &["rle.lambda_F=-1".into()]).is_err());
    }

    #[test]
    fn normalized_round_trip() {
        let c = RunConfig::from_json_str(r#"{"preset": "pointreach-rle", "seed": 9}"#, &[]).unwrap();
        let text = c.to_json();
        let back = RunConfig::from_json_str(&text, &[]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), text);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Streaming per-dimension mean and population variance (Chan et al. merge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: f64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl RunningStats {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn variance(&self) -> Vec<f64> {
        if self.count == 0.0 {
            return vec![1.0; self.dim()];
        }
        self.m2.iter().map(|m| (m / self.count).max(0.0)).collect()
    }

    /// Standard deviation, 1 before any data.
    pub fn std(&self) -> Vec<f64> {
        self.variance().into_iter().map(f64::sqrt).collect()
    }

    pub fn merge(&mut self, other: &RunningStats) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "cannot merge {}-d statistics into {}-d",
                other.dim(),
                self.dim()
            )));
        }
        if other.count == 0.0 {
            return Ok(());
        }
        let total = self.count + other.count;
        for d in 0..self.dim() {
            let delta = other.mean[d] - self.mean[d];
            self.mean[d] += delta * other.count / total;
            self.m2[d] += other.m2[d] + delta * delta * self.count * other.count / total;
        }
        self.count = total;
        Ok(())
    }

    /// Two-pass statistics of `batch`, merged in.
    pub fn update<R: AsRef<[f64]>>(&mut self, batch: &[R]) -> Result<()> {
        if batch.is_empty() {
            return Ok(());
        }
        let dim = self.dim();
        let n = batch.len() as f64;
        let mut local = RunningStats::new(dim);
        for row in batch {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Shape(format!("{}-d sample for {dim}-d statistics", row.len())));
            }
            for d in 0..dim {
                local.mean[d] += row[d];
            }
        }
        local.mean.iter_mut().for_each(|m| *m /= n);
        for row in batch {
            for (d, &x) in row.as_ref().iter().enumerate() {
                local.m2[d] += (x - local.mean[d]).powi(2);
            }
        }
        local.count = n;
        self.merge(&local)
    }

    /// `(x - mean) / std`, with a small floor on the deviation.
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        let std = self.std();
        x.iter()
            .zip(&self.mean)
            .zip(&std)
            .map(|((x, m), s)| (x - m) / s.max(1e-8))
            .collect()
    }
}

/// Scales rewards by the running deviation of their per-worker discounted sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardNormalizer {
    pub discount: f64,
    pub accumulators: Vec<f64>,
    pub return_stats: RunningStats,
}

impl RewardNormalizer {
    pub fn new(workers: usize, discount: f64) -> Self {
        Self {
            discount,
            accumulators: vec![0.0; workers],
            return_stats: RunningStats::new(1),
        }
    }

    /// Normalises one step of per-worker rewards. The divisor is the deviation
    /// before this step's returns are merged; accumulators restart after `done`.
    pub fn normalize(&mut self, raw: &[f64], dones: &[bool]) -> Result<Vec<f64>> {
        if raw.len() != self.accumulators.len() || dones.len() != raw.len() {
            return Err(Error::Shape(format!(
                "reward normaliser has {} workers, got {} rewards and {} dones",
                self.accumulators.len(),
                raw.len(),
                dones.len()
            )));
        }
        let std = self.return_stats.std()[0];
        let out = raw.iter().map(|r| r / (std + 1e-8)).collect();
        let mut returns = Vec::with_capacity(raw.len());
        for (i, &r) in raw.iter().enumerate() {
            self.accumulators[i] = self.discount * self.accumulators[i] + r;
            returns.push([self.accumulators[i]]);
            if dones[i] {
                self.accumulators[i] = 0.0;
            }
        }
        self.return_stats.update(&returns)?;
        Ok(out)
    }
}

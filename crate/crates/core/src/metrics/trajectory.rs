use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::layout::Cell;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: u64,
    pub worker: usize,
    pub row: usize,
    pub col: usize,
    pub z_id: usize,
}

/// Ordered cell records of selected rollouts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub records: Vec<TrajectoryRecord>,
}

impl TrajectoryLog {
    pub fn push(&mut self, step: u64, worker: usize, (row, col): Cell, z_id: usize) {
        self.records.push(TrajectoryRecord {
            step,
            worker,
            row,
            col,
            z_id,
        });
    }

    pub fn z_ids(&self) -> BTreeSet<usize> {
        self.records.iter().map(|r| r.z_id).collect()
    }

    /// Distinct cells visited under each latent.
    pub fn cells_by_z(&self) -> BTreeMap<usize, BTreeSet<Cell>> {
        let mut out: BTreeMap<usize, BTreeSet<Cell>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.z_id).or_default().insert((r.row, r.col));
        }
        out
    }

    /// Consecutive records of a worker must be the same cell, a grid
    /// neighbour, or a reset (`step` restarting at 0).
    pub fn check_adjacency(&self) -> Result<()> {
        let mut last: BTreeMap<usize, TrajectoryRecord> = BTreeMap::new();
        for r in &self.records {
            if let Some(p) = last.get(&r.worker) {
                let dist = p.row.abs_diff(r.row) + p.col.abs_diff(r.col);
                if r.step != 0 && dist > 1 {
                    return Err(Error::Invariant(format!(
                        "worker {} jumped from ({}, {}) to ({}, {}) at step {}",
                        r.worker, p.row, p.col, r.row, r.col, r.step
                    )));
                }
            }
            last.insert(r.worker, *r);
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let records = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<TrajectoryRecord>, _>>()
            .map_err(|e| Error::csv(path, e))?;
        Ok(Self { records })
    }
}

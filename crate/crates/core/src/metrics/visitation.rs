use std::fs;
use std::io::Write;
use std::path::Path;

use crate::envs::layout::{Cell, GridLayout, GRID};
use crate::error::{Error, Result};

/// Visit counts over the 50x50 grid, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitationGrid {
    pub counts: Vec<u64>,
    pub total_steps: u64,
}

impl Default for VisitationGrid {
    fn default() -> Self {
        Self {
            counts: vec![0; GRID * GRID],
            total_steps: 0,
        }
    }
}

/// Distinct cells visited and visits per room (0 top-left, 1 top-right,
/// 2 bottom-left, 3 bottom-right).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Coverage {
    pub unique_cells: usize,
    pub room_visits: [u64; 4],
}

impl Coverage {
    pub fn rooms_visited(&self) -> usize {
        self.room_visits.iter().filter(|&&c| c > 0).count()
    }
}

impl VisitationGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, (r, c): Cell) {
        self.counts[r * GRID + c] += 1;
        self.total_steps += 1;
    }

    pub fn get(&self, (r, c): Cell) -> u64 {
        self.counts[r * GRID + c]
    }

    pub fn merge(&mut self, other: &VisitationGrid) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_steps += other.total_steps;
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(GRID * GRID * 3);
        for r in 0..GRID {
            let row: Vec<String> = (0..GRID).map(|c| self.get((r, c)).to_string()).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut g = Self::new();
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.len() != GRID {
            return Err(Error::Shape(format!("visitation CSV has {} rows, expected {GRID}", rows.len())));
        }
        for (r, line) in rows.iter().enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != GRID {
                return Err(Error::Shape(format!("visitation CSV row {r} has {} columns", cells.len())));
            }
            for (c, v) in cells.iter().enumerate() {
                let n: u64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Shape(format!("bad count {v:?} at row {r}, column {c}")))?;
                g.counts[r * GRID + c] = n;
                g.total_steps += n;
            }
        }
        Ok(g)
    }

    /// 8-bit greyscale of `round(255·ln(1+c)/ln(1+max))`.
    pub fn pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{GRID} {GRID}\n255\n").into_bytes();
        let max = self.max();
        let denom = (1.0 + max as f64).ln();
        out.extend(self.counts.iter().map(|&c| {
            if max == 0 {
                0
            } else {
                (255.0 * (1.0 + c as f64).ln() / denom).round() as u8
            }
        }));
        out
    }

    pub fn coverage(&self, layout: &GridLayout) -> Coverage {
        let mut cov = Coverage::default();
        for r in 0..GRID {
            for c in 0..GRID {
                let n = self.get((r, c));
                if n == 0 || layout.is_wall((r, c)) {
                    continue;
                }
                cov.unique_cells += 1;
                if let Some(room) = layout.room_of((r, c)) {
                    cov.room_visits[room] += n;
                }
            }
        }
        cov
    }
}

pub fn coverage_stats(grid: &VisitationGrid, layout: &GridLayout) -> Coverage {
    grid.coverage(layout)
}

/// Writes `<stem>.csv` with raw counts and `<stem>.pgm` with the log-scaled image.
pub fn emit_heatmap(grid: &VisitationGrid, csv_path: &Path, pgm_path: &Path) -> Result<()> {
    fs::write(csv_path, grid.to_csv()).map_err(|e| Error::io(csv_path, e))?;
    let mut f = fs::File::create(pgm_path).map_err(|e| Error::io(pgm_path, e))?;
    f.write_all(&grid.pgm()).map_err(|e| Error::io(pgm_path, e))
}

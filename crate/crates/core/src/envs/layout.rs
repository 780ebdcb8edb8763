//! FourRoom grid geometry.

use std::collections::VecDeque;

pub const GRID: usize = 50;
pub const WALL_INDEX: usize = 24;

pub type Cell = (usize, usize);

/// Wall cells, single-cell openings, start, goal and the NoisyTV square.
/// Row 0 is the top of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    walls: Vec<bool>,
    pub openings: [Cell; 4],
    pub start: Cell,
    pub goal: Cell,
    pub noisy_tv: [Cell; 4],
}

impl Default for GridLayout {
    fn default() -> Self {
        Self::canonical()
    }
}

impl GridLayout {
    /// Walls fill row 24 and column 24; each half-wall has an opening at its midpoint.
    pub fn canonical() -> Self {
        let openings = [(WALL_INDEX, 12), (WALL_INDEX, 37), (12, WALL_INDEX), (37, WALL_INDEX)];
        let mut walls = vec![false; GRID * GRID];
        for i in 0..GRID {
            walls[WALL_INDEX * GRID + i] = true;
            walls[i * GRID + WALL_INDEX] = true;
        }
        for &(r, c) in &openings {
            walls[r * GRID + c] = false;
        }
        Self {
            walls,
            openings,
            start: (0, GRID - 1),
            goal: (GRID - 1, 0),
            // bottom-left room, diagonally opposite the start
            noisy_tv: [(36, 11), (36, 12), (37, 11), (37, 12)],
        }
    }

    pub fn is_wall(&self, (r, c): Cell) -> bool {
        self.walls[r * GRID + c]
    }

    pub fn is_opening(&self, cell: Cell) -> bool {
        self.openings.contains(&cell)
    }

    pub fn in_noisy_tv(&self, cell: Cell) -> bool {
        self.noisy_tv.contains(&cell)
    }

    /// Room quadrant of a free cell: 0 top-left, 1 top-right, 2 bottom-left,
    /// 3 bottom-right. Walls and openings belong to no room.
    pub fn room_of(&self, (r, c): Cell) -> Option<usize> {
        if r == WALL_INDEX || c == WALL_INDEX {
            return None;
        }
        Some(match (r < WALL_INDEX, c < WALL_INDEX) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        })
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..GRID).flat_map(move |r| (0..GRID).map(move |c| (r, c))).filter(|&c| !self.is_wall(c))
    }

    pub fn neighbors(&self, (r, c): Cell) -> impl Iterator<Item = Cell> + '_ {
        let cand = [
            (r.checked_sub(1), Some(c)),
            (Some(r + 1).filter(|&v| v < GRID), Some(c)),
            (Some(r), c.checked_sub(1)),
            (Some(r), Some(c + 1).filter(|&v| v < GRID)),
        ];
        cand.into_iter()
            .filter_map(|(a, b)| Some((a?, b?)))
            .filter(move |&cell| !self.is_wall(cell))
    }

    /// Cells reachable from the start by breadth-first flood fill.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; GRID * GRID];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start.0 * GRID + self.start.1] = true;
        while let Some(cell) = queue.pop_front() {
            for n in self.neighbors(cell) {
                let k = n.0 * GRID + n.1;
                if !seen[k] {
                    seen[k] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    /// Shortest start-to-goal path length in steps.
    pub fn shortest_path(&self) -> Option<usize> {
        let mut dist = vec![usize::MAX; GRID * GRID];
        let mut queue = VecDeque::from([self.start]);
        dist[self.start.0 * GRID + self.start.1] = 0;
        while let Some(cell) = queue.pop_front() {
            let d = dist[cell.0 * GRID + cell.1];
            if cell == self.goal {
                return Some(d);
            }
            for n in self.neighbors(cell) {
                let k = n.0 * GRID + n.1;
                if dist[k] == usize::MAX {
                    dist[k] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// ASCII dump: `#` wall, `o` opening, `S` start, `*` goal, `.` free.
    pub fn ascii(&self) -> String {
        let mut s = String::with_capacity(GRID * (GRID + 1));
        for r in 0..GRID {
            for c in 0..GRID {
                let ch = if (r, c) == self.start {
                    'S'
                } else if (r, c) == self.goal {
                    '*'
                } else if self.is_opening((r, c)) {
                    'o'
                } else if self.is_wall((r, c)) {
                    '#'
                } else {
                    '.'
                };
                s.push(ch);
            }
            s.push('\n');
        }
        s
    }
}

//! Grid mazes with walls on cell edges.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{MdpBuilder, State, TabularMdp};
use crate::rng::RngStream;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeSpec {
    pub width: usize,
    pub height: usize,
    /// Probability that an interior edge carries a wall.
    pub wall_density: f64,
    /// `(x, y)` of the goal; drawn uniformly when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<(usize, usize)>,
}

impl MazeSpec {
    pub fn check(&self) -> Result<()> {
        if self.width * self.height < 2 {
            return Err(Error::InvalidSpec("maze needs at least two cells".into()));
        }
        if !(0.0..1.0).contains(&self.wall_density) {
            return Err(Error::InvalidSpec(format!("wall density {} outside [0, 1)", self.wall_density)));
        }
        if let Some((x, y)) = self.goal {
            if x >= self.width || y >= self.height {
                return Err(Error::InvalidSpec(format!("goal ({x}, {y}) outside the grid")));
            }
        }
        Ok(())
    }
}

impl Default for MazeSpec {
    fn default() -> Self {
        MazeSpec { width: 20, height: 20, wall_density: 0.3, goal: None }
    }
}

/// Wall layout of a generated maze.
#[derive(Clone, Debug, PartialEq)]
pub struct MazeLayout {
    pub width: usize,
    pub height: usize,
    pub goal: State,
    /// Wall between `(x, y)` and `(x + 1, y)`.
    east: Vec<bool>,
    /// Wall between `(x, y)` and `(x, y + 1)`.
    south: Vec<bool>,
}

impl MazeLayout {
    pub fn open(width: usize, height: usize, goal: State) -> Self {
        MazeLayout { width, height, goal, east: vec![false; width * height], south: vec![false; width * height] }
    }

    #[inline]
    pub fn cell(&self, x: usize, y: usize) -> State {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, s: State) -> (usize, usize) {
        (s % self.width, s / self.width)
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    /// Cell reached by moving `action` from `s`, or `s` if blocked.
    pub fn move_from(&self, s: State, action: usize) -> State {
        let (x, y) = self.coords(s);
        match action {
            UP if y > 0 && !self.south[self.cell(x, y - 1)] => self.cell(x, y - 1),
            DOWN if y + 1 < self.height && !self.south[s] => self.cell(x, y + 1),
            LEFT if x > 0 && !self.east[self.cell(x - 1, y)] => self.cell(x - 1, y),
            RIGHT if x + 1 < self.width && !self.east[s] => self.cell(x + 1, y),
            _ => s,
        }
    }

    /// Cells reachable from the goal (walls are symmetric, so this is also
    /// the set of cells that reach the goal).
    pub fn reachable_from_goal(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_cells()];
        let mut queue = VecDeque::from([self.goal]);
        seen[self.goal] = true;
        while let Some(s) = queue.pop_front() {
            for a in 0..4 {
                let n = self.move_from(s, a);
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.reachable_from_goal().iter().all(|&r| r)
    }

    /// The MDP: 4 actions, reward 1 for entering the goal, goal terminal,
    /// uniform start over non-goal cells.
    pub fn to_mdp(&self) -> Result<TabularMdp> {
        let n = self.num_cells();
        let mut b = MdpBuilder::new(n, 4);
        for s in 0..n {
            if s == self.goal {
                continue;
            }
            for a in 0..4 {
                let next = self.move_from(s, a);
                b.deterministic(s, a, next);
                if next == self.goal {
                    b.reward(s, a, 1.0);
                }
            }
        }
        b.terminal(self.goal);
        let p = 1.0 / (n - 1) as f64;
        b.initial((0..n).filter(|&s| s != self.goal).map(|s| (s, p)).collect());
        b.build()
    }
}

impl fmt::Display for MazeLayout {
    /// `#` walls, `.` free, `G` goal. Cells sit at odd coordinates.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (w, h) = (self.width, self.height);
        for row in 0..(2 * h + 1) {
            let mut line = String::with_capacity(2 * w + 1);
            for col in 0..(2 * w + 1) {
                let ch = match (row % 2, col % 2) {
                    (1, 1) => {
                        let s = self.cell(col / 2, row / 2);
                        if s == self.goal {
                            'G'
                        } else {
                            '.'
                        }
                    }
                    (1, 0) => {
                        let x = col / 2;
                        if x == 0 || x == w || self.east[self.cell(x - 1, row / 2)] {
                            '#'
                        } else {
                            '.'
                        }
                    }
                    (0, 1) => {
                        let y = row / 2;
                        if y == 0 || y == h || self.south[self.cell(col / 2, y - 1)] {
                            '#'
                        } else {
                            '.'
                        }
                    }
                    _ => '#',
                };
                line.push(ch);
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// A generated maze: the MDP plus its layout.
#[derive(Clone, Debug)]
pub struct Maze {
    pub mdp: TabularMdp,
    pub layout: MazeLayout,
}

/// Draws walls independently per interior edge, then knocks down randomly
/// chosen walls on the boundary of the goal's component until every cell
/// is connected to the goal.
pub fn gen_maze(spec: &MazeSpec, rng: &mut RngStream) -> Result<Maze> {
    spec.check()?;
    let (w, h) = (spec.width, spec.height);
    let goal = match spec.goal {
        Some((x, y)) => y * w + x,
        None => rng.below(w * h),
    };
    let mut layout = MazeLayout::open(w, h, goal);
    for y in 0..h {
        for x in 0..w {
            let s = layout.cell(x, y);
            if x + 1 < w {
                layout.east[s] = rng.bernoulli(spec.wall_density);
            }
            if y + 1 < h {
                layout.south[s] = rng.bernoulli(spec.wall_density);
            }
        }
    }

    let max_carves = w * h;
    let mut carves = 0;
    loop {
        let reached = layout.reachable_from_goal();
        if reached.iter().all(|&r| r) {
            break;
        }
        if carves == max_carves {
            return Err(Error::MazeGeneration { attempts: carves });
        }
        // Walls separating the goal component from the rest, in cell order.
        let mut blocking: Vec<(bool, State)> = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let s = layout.cell(x, y);
                if x + 1 < w && layout.east[s] && reached[s] != reached[s + 1] {
                    blocking.push((true, s));
                }
                if y + 1 < h && layout.south[s] && reached[s] != reached[s + w] {
                    blocking.push((false, s));
                }
            }
        }
        let (is_east, s) = blocking[rng.below(blocking.len())];
        if is_east {
            layout.east[s] = false;
        } else {
            layout.south[s] = false;
        }
        carves += 1;
    }

    let mdp = layout.to_mdp()?;
    Ok(Maze { mdp, layout })
}

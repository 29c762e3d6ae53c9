//! Gridworld MDP without a reward function.
//!
//! States are grid cells addressed as `(x, y)` with `x` the column and `y` the
//! row; `y` grows downwards so `up` decrements `y`. Cell data is stored
//! row-major (`index = y * width + x`). Transitions are deterministic: a move
//! into a wall or an obstacle leaves the agent where it is.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    /// Identical or 4-adjacent.
    pub fn is_adjacent_or_same(self, other: Cell) -> bool {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y) <= 1
    }
}

impl From<[usize; 2]> for Cell {
    fn from([x, y]: [usize; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [usize; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::Stay => "stay",
        }
    }
}

/// On-disk form of an [`Environment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentFile {
    pub width: usize,
    pub height: usize,
    pub features: Vec<String>,
    pub cells: Vec<Vec<u8>>,
    #[serde(default)]
    pub obstacles: Vec<Cell>,
    pub discount: f64,
    pub horizon: usize,
}

/// A validated, immutable feature-labelled gridworld.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    width: usize,
    height: usize,
    feature_names: Vec<String>,
    cells: Vec<Vec<u8>>,
    blocked: Vec<bool>,
    discount: f64,
    horizon: usize,
}

impl Environment {
    pub fn from_file(file: EnvironmentFile) -> Result<Self> {
        let EnvironmentFile {
            width,
            height,
            features,
            cells,
            obstacles,
            discount,
            horizon,
        } = file;

        if width == 0 || height == 0 {
            return Err(Error::InvalidEnvironment(format!(
                "grid must have at least one cell, got {width}x{height}"
            )));
        }
        if features.is_empty() {
            return Err(Error::InvalidEnvironment(
                "at least one feature is required".into(),
            ));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidEnvironment(format!(
                "discount must lie in [0, 1), got {discount}"
            )));
        }
        let n = width * height;
        if cells.len() != n {
            return Err(Error::InvalidEnvironment(format!(
                "expected {n} cells for a {width}x{height} grid, got {}",
                cells.len()
            )));
        }

        let mut blocked = vec![false; n];
        for c in &obstacles {
            if c.x >= width || c.y >= height {
                return Err(Error::OutOfBounds {
                    cell: *c,
                    width,
                    height,
                });
            }
            blocked[c.y * width + c.x] = true;
        }

        let d = features.len();
        for (index, bits) in cells.iter().enumerate() {
            let (x, y) = (index % width, index / width);
            let bad = |reason: String| Error::InvalidCell {
                index,
                x,
                y,
                reason,
            };
            if bits.len() != d {
                return Err(bad(format!(
                    "expected {d} feature bits, got {}",
                    bits.len()
                )));
            }
            if let Some(b) = bits.iter().find(|&&b| b > 1) {
                return Err(bad(format!("feature bits must be 0 or 1, got {b}")));
            }
            if !blocked[index] && bits.iter().all(|&b| b == 0) {
                return Err(bad("cell has no feature".into()));
            }
        }

        Ok(Environment {
            width,
            height,
            feature_names: features,
            cells,
            blocked,
            discount,
            horizon,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_file(&self) -> EnvironmentFile {
        EnvironmentFile {
            width: self.width,
            height: self.height,
            features: self.feature_names.clone(),
            cells: self.cells.clone(),
            obstacles: self.obstacle_cells(),
            discount: self.discount,
            horizon: self.horizon,
        }
    }

    /// Canonical compact JSON: fixed key order, obstacles in row-major order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("environment serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    /// Feature dimension D.
    pub fn feature_dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn index_of(&self, c: Cell) -> Option<usize> {
        self.contains(c).then(|| c.y * self.width + c.x)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.index_of(c).is_some_and(|i| self.blocked[i])
    }

    /// Inside the grid and not an obstacle.
    pub fn is_open(&self, c: Cell) -> bool {
        self.index_of(c).is_some_and(|i| !self.blocked[i])
    }

    pub(crate) fn is_open_index(&self, index: usize) -> bool {
        !self.blocked[index]
    }

    pub fn obstacle_cells(&self) -> Vec<Cell> {
        (0..self.num_cells())
            .filter(|&i| self.blocked[i])
            .map(|i| self.cell_at(i))
            .collect()
    }

    /// Feature bits of the cell at `index`.
    pub fn phi(&self, index: usize) -> &[u8] {
        &self.cells[index]
    }

    pub fn features_at(&self, c: Cell) -> Option<&[u8]> {
        self.index_of(c).map(|i| self.phi(i))
    }

    pub fn has_feature(&self, c: Cell, feature: usize) -> bool {
        self.features_at(c)
            .and_then(|bits| bits.get(feature))
            .is_some_and(|&b| b == 1)
    }

    /// Whether any open cell carries `feature`.
    pub fn feature_present(&self, feature: usize) -> bool {
        (0..self.num_cells()).any(|i| !self.blocked[i] && self.cells[i][feature] == 1)
    }

    /// Per-cell linear reward `w . phi(c)`; obstacle cells get 0.
    pub fn cell_rewards(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: weights.len(),
            });
        }
        Ok((0..self.num_cells())
            .map(|i| {
                if self.blocked[i] {
                    0.0
                } else {
                    dot_bits(weights, &self.cells[i])
                }
            })
            .collect())
    }

    /// Deterministic transition. Moves off the grid or into an obstacle are
    /// self-transitions.
    pub fn step(&self, state: Cell, action: Action) -> Cell {
        let (x, y) = (state.x, state.y);
        let next = match action {
            Action::Up if y > 0 => Cell::new(x, y - 1),
            Action::Down => Cell::new(x, y + 1),
            Action::Left if x > 0 => Cell::new(x - 1, y),
            Action::Right => Cell::new(x + 1, y),
            _ => state,
        };
        if self.is_open(next) {
            next
        } else {
            state
        }
    }

    /// Like [`step`](Self::step) but with an absorbing goal.
    pub fn step_with_goal(&self, state: Cell, action: Action, goal: Option<Cell>) -> Cell {
        if goal == Some(state) {
            state
        } else {
            self.step(state, action)
        }
    }

    /// Successor index table `[state][action]` with optional absorbing goal.
    pub(crate) fn successor_table(&self, goal: Option<Cell>) -> Vec<[usize; 5]> {
        let goal_index = goal.and_then(|g| self.index_of(g));
        (0..self.num_cells())
            .map(|i| {
                let here = self.cell_at(i);
                let mut row = [i; 5];
                if self.blocked[i] || Some(i) == goal_index {
                    return row;
                }
                for (slot, a) in row.iter_mut().zip(Action::ALL) {
                    let next = self.step(here, a);
                    *slot = next.y * self.width + next.x;
                }
                row
            })
            .collect()
    }
}

pub(crate) fn dot_bits(weights: &[f64], bits: &[u8]) -> f64 {
    weights
        .iter()
        .zip(bits)
        .filter(|(_, &b)| b == 1)
        .map(|(w, _)| w)
        .sum()
}

/// An ordered state sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    states: Vec<Cell>,
}

impl Trajectory {
    pub fn new(states: Vec<Cell>) -> Self {
        Trajectory { states }
    }

    pub fn states(&self) -> &[Cell] {
        &self.states
    }

    /// Number of states |xi|.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of transitions, `len() - 1`.
    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn first(&self) -> Option<Cell> {
        self.states.first().copied()
    }

    pub fn last(&self) -> Option<Cell> {
        self.states.last().copied()
    }

    /// Checks length, bounds, obstacles and adjacency against `env`.
    pub fn validate(&self, env: &Environment) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::InvalidTrajectory {
                index: 0,
                reason: "trajectory is empty".into(),
            });
        }
        for (index, &s) in self.states.iter().enumerate() {
            if !env.contains(s) {
                return Err(Error::InvalidTrajectory {
                    index,
                    reason: format!("{s} is outside the grid"),
                });
            }
            if env.is_obstacle(s) {
                return Err(Error::InvalidTrajectory {
                    index,
                    reason: format!("{s} is an obstacle"),
                });
            }
            if index > 0 && !self.states[index - 1].is_adjacent_or_same(s) {
                return Err(Error::InvalidTrajectory {
                    index,
                    reason: format!(
                        "{} -> {s} is not a single grid step",
                        self.states[index - 1]
                    ),
                });
            }
        }
        Ok(())
    }
}

impl From<Vec<Cell>> for Trajectory {
    fn from(states: Vec<Cell>) -> Self {
        Trajectory::new(states)
    }
}

/// Per-feature visit counts of a trajectory: component `i` is the number of
/// states whose feature `i` is set.
pub fn feature_count(traj: &Trajectory, env: &Environment) -> Result<Vec<f64>> {
    let mut counts = vec![0.0; env.feature_dim()];
    for &s in traj.states() {
        let bits = env.features_at(s).ok_or(Error::OutOfBounds {
            cell: s,
            width: env.width(),
            height: env.height(),
        })?;
        for (c, &b) in counts.iter_mut().zip(bits) {
            *c += f64::from(b);
        }
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationSet {
    pub start: Cell,
    pub goal: Cell,
    pub trajectories: Vec<Trajectory>,
}

impl DemonstrationSet {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("demonstrations serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Longest trajectory, in transitions.
    pub fn max_steps(&self) -> usize {
        self.trajectories
            .iter()
            .map(Trajectory::steps)
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self, env: &Environment) -> Result<()> {
        if self.trajectories.is_empty() {
            return Err(Error::InvalidDemonstrations(
                "at least one trajectory is required".into(),
            ));
        }
        for endpoint in [self.start, self.goal] {
            if !env.is_open(endpoint) {
                return Err(Error::InvalidDemonstrations(format!(
                    "{endpoint} is not an open cell"
                )));
            }
        }
        for (i, t) in self.trajectories.iter().enumerate() {
            t.validate(env).map_err(|e| {
                Error::InvalidDemonstrations(format!("trajectory {i}: {e}"))
            })?;
            if t.first() != Some(self.start) {
                return Err(Error::InvalidDemonstrations(format!(
                    "trajectory {i} does not begin at the start cell {}",
                    self.start
                )));
            }
            if t.steps() > env.horizon() {
                return Err(Error::InvalidDemonstrations(format!(
                    "trajectory {i} has {} steps, horizon is {}",
                    t.steps(),
                    env.horizon()
                )));
            }
        }
        Ok(())
    }

    /// Mean per-trajectory feature count.
    pub fn mean_feature_count(&self, env: &Environment) -> Result<Vec<f64>> {
        let mut mean = vec![0.0; env.feature_dim()];
        for t in &self.trajectories {
            for (m, c) in mean.iter_mut().zip(feature_count(t, env)?) {
                *m += c;
            }
        }
        let n = self.trajectories.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(mean)
    }
}

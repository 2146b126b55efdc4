//! Deterministic 2D grid world for hard-exploration experiments.
//!
//! Cells are addressed as `(x, y)` with `0 <= x < width`, `0 <= y < height`.
//! Actions: 0 = up (y + 1), 1 = down (y - 1), 2 = left (x - 1), 3 = right (x + 1).

use serde::{Deserialize, Serialize};

use crate::encoding::{ecv_encode_point, Axis, EcvSpec};
use crate::env::{Environment, Step, StepInfo, Terminal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    Sparse,
    /// No goal reward; leaving the grid is still penalized.
    NoReward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [GridAction::Up, GridAction::Down, GridAction::Left, GridAction::Right];

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::usage(format!("grid action {index} out of range 0..4")))
    }

    fn delta(self) -> (i64, i64) {
        match self {
            GridAction::Up => (0, 1),
            GridAction::Down => (0, -1),
            GridAction::Left => (-1, 0),
            GridAction::Right => (1, 0),
        }
    }
}

fn default_goal_reward() -> f64 {
    30.0
}

fn default_boundary_reward() -> f64 {
    -30.0
}

fn default_max_steps() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub start: [usize; 2],
    #[serde(default)]
    pub goal: Option<[usize; 2]>,
    pub mode: RewardMode,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_goal_reward")]
    pub goal_reward: f64,
    #[serde(default = "default_boundary_reward")]
    pub boundary_reward: f64,
    /// ECV nodes per axis; defaults to one node per cell.
    #[serde(default)]
    pub bins_per_axis: Option<usize>,
}

impl Default for GridConfig {
    /// 40x40, start at the centre, goal near the far corner.
    fn default() -> Self {
        Self {
            width: 40,
            height: 40,
            start: [20, 20],
            goal: Some([37, 37]),
            mode: RewardMode::Sparse,
            max_steps: default_max_steps(),
            goal_reward: default_goal_reward(),
            boundary_reward: default_boundary_reward(),
            bins_per_axis: None,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::config("grid must be at least 2x2"));
        }
        if !self.in_bounds(self.start[0] as i64, self.start[1] as i64) {
            return Err(Error::config(format!("start {:?} outside grid", self.start)));
        }
        if let Some(goal) = self.goal {
            if !self.in_bounds(goal[0] as i64, goal[1] as i64) {
                return Err(Error::config(format!("goal {goal:?} outside grid")));
            }
            if goal == self.start {
                return Err(Error::config("goal coincides with start"));
            }
        }
        if self.mode == RewardMode::Sparse && self.goal.is_none() {
            return Err(Error::config("sparse mode needs a goal cell"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be positive"));
        }
        if matches!(self.bins_per_axis, Some(b) if b < 2) {
            return Err(Error::config("bins_per_axis must be at least 2"));
        }
        Ok(())
    }

    fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// ECV spec over the cell coordinates.
    pub fn ecv_spec(&self) -> Result<EcvSpec> {
        let bx = self.bins_per_axis.unwrap_or(self.width);
        let by = self.bins_per_axis.unwrap_or(self.height);
        EcvSpec::new(vec![
            Axis::new("x", 0.0, (self.width - 1) as f64, bx)?,
            Axis::new("y", 0.0, (self.height - 1) as f64, by)?,
        ])
    }
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    config: GridConfig,
    spec: EcvSpec,
    position: (usize, usize),
    steps: usize,
    done: bool,
}

impl GridWorld {
    pub fn new(config: GridConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.ecv_spec()?;
        let position = (config.start[0], config.start[1]);
        Ok(Self {
            config,
            spec,
            position,
            steps: 0,
            done: false,
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn position(&self) -> (usize, usize) {
        self.position
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn spec(&self) -> &EcvSpec {
        &self.spec
    }

    /// ECV of a cell's coordinates; serves both as observation and as the
    /// exploration-bonus feature.
    pub fn coordinate_feature(&self, cell: (usize, usize)) -> Result<Vec<f64>> {
        ecv_encode_point(&[cell.0 as f64, cell.1 as f64], &self.spec)
    }

    fn observe(&self) -> Vec<f64> {
        self.coordinate_feature(self.position)
            .expect("agent position is always in bounds")
    }
}

impl Environment for GridWorld {
    fn action_count(&self) -> usize {
        4
    }

    fn observation_len(&self) -> usize {
        self.spec.len()
    }

    fn feature_len(&self) -> usize {
        self.spec.len()
    }

    fn reset(&mut self) -> Vec<f64> {
        self.position = (self.config.start[0], self.config.start[1]);
        self.steps = 0;
        self.done = false;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        if self.done {
            return Err(Error::usage("step called on a finished grid episode"));
        }
        let action = GridAction::from_index(action)?;
        let from = self.position;
        let (dx, dy) = action.delta();
        let (nx, ny) = (from.0 as i64 + dx, from.1 as i64 + dy);
        self.steps += 1;

        let mut reward = 0.0;
        let mut terminal = None;
        if !self.config.in_bounds(nx, ny) {
            reward = self.config.boundary_reward;
            terminal = Some(Terminal::Boundary);
        } else {
            self.position = (nx as usize, ny as usize);
            let at_goal = self
                .config
                .goal
                .is_some_and(|g| (g[0], g[1]) == self.position);
            if self.config.mode == RewardMode::Sparse && at_goal {
                reward = self.config.goal_reward;
                terminal = Some(Terminal::Goal);
            }
        }
        if terminal.is_none() && self.steps >= self.config.max_steps {
            terminal = Some(Terminal::Timeout);
        }
        self.done = terminal.is_some();
        Ok(Step {
            observation: self.observe(),
            reward,
            done: self.done,
            info: StepInfo {
                terminal,
                cell: Some(from),
                cruise_violation: false,
            },
        })
    }

    fn feature(&self) -> Vec<f64> {
        self.observe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::ecv_decode;

    fn small(mode: RewardMode) -> GridConfig {
        GridConfig {
            width: 5,
            height: 5,
            start: [2, 2],
            goal: Some([3, 2]),
            mode,
            max_steps: 10,
            ..GridConfig::default()
        }
    }

    #[test]
    fn reset_is_deterministic_and_at_start() {
        let mut env = GridWorld::new(small(RewardMode::Sparse)).unwrap();
        let a = env.reset();
        env.step(0).unwrap();
        let b = env.reset();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert_eq!(ecv_decode(&a, env.spec()).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn reaching_goal_pays_30() {
        let mut env = GridWorld::new(small(RewardMode::Sparse)).unwrap();
        env.reset();
        let s = env.step(3).unwrap();
        assert_eq!(s.reward, 30.0);
        assert!(s.done);
        assert_eq!(s.info.terminal, Some(Terminal::Goal));
        assert!(env.step(0).is_err());
    }

    #[test]
    fn leaving_grid_costs_30() {
        let mut env = GridWorld::new(small(RewardMode::Sparse)).unwrap();
        env.reset();
        env.step(2).unwrap();
        env.step(2).unwrap();
        let s = env.step(2).unwrap();
        assert_eq!(s.reward, -30.0);
        assert!(s.done);
        assert_eq!(s.info.terminal, Some(Terminal::Boundary));
        assert_eq!(env.position(), (0, 2));
    }

    #[test]
    fn no_reward_mode_ignores_goal() {
        let mut env = GridWorld::new(small(RewardMode::NoReward)).unwrap();
        env.reset();
        let s = env.step(3).unwrap();
        assert_eq!(s.reward, 0.0);
        assert!(!s.done);
        env.step(3).unwrap();
        let s = env.step(3).unwrap();
        assert_eq!((s.reward, s.info.terminal), (-30.0, Some(Terminal::Boundary)));
    }

    #[test]
    fn episode_is_capped() {
        let mut env = GridWorld::new(small(RewardMode::NoReward)).unwrap();
        env.reset();
        let mut n = 0;
        loop {
            n += 1;
            // alternate up/down to stay inside
            let s = env.step(n % 2).unwrap();
            if s.done {
                assert_eq!(s.info.terminal, Some(Terminal::Timeout));
                break;
            }
        }
        assert_eq!(n, 10);
    }

    #[test]
    fn features_are_injective_and_stable() {
        let env = GridWorld::new(GridConfig {
            width: 40,
            height: 40,
            start: [20, 20],
            goal: None,
            mode: RewardMode::NoReward,
            bins_per_axis: Some(40),
            ..GridConfig::default()
        })
        .unwrap();
        let f11 = env.coordinate_feature((1, 1)).unwrap();
        assert_eq!(f11, env.coordinate_feature((1, 1)).unwrap());
        assert_eq!(f11.len(), 80);
        assert_eq!(f11[1], 1.0);
        assert_eq!(f11[41], 1.0);
        assert_eq!(f11.iter().sum::<f64>(), 2.0);
        assert_ne!(f11, env.coordinate_feature((1, 2)).unwrap());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = small(RewardMode::Sparse);
        c.goal = None;
        assert!(GridWorld::new(c).is_err());
        let mut c = small(RewardMode::Sparse);
        c.start = [5, 0];
        assert!(GridWorld::new(c).is_err());
        assert!(GridWorld::new(small(RewardMode::Sparse)).unwrap().clone().step(7).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// Grid agent reached the goal cell.
    Goal,
    /// Grid agent stepped off the grid.
    Boundary,
    /// Step or time limit reached.
    Timeout,
    /// UCAV entered the target's arrival radius.
    Arrived,
    /// A missile came within the kill radius.
    ShotDown,
    /// UCAV left the battlefield volume.
    LeftBattlefield,
}

impl Terminal {
    pub fn as_str(self) -> &'static str {
        match self {
            Terminal::Goal => "goal",
            Terminal::Boundary => "boundary",
            Terminal::Timeout => "timeout",
            Terminal::Arrived => "arrived",
            Terminal::ShotDown => "shot_down",
            Terminal::LeftBattlefield => "left_battlefield",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "goal" => Terminal::Goal,
            "boundary" => Terminal::Boundary,
            "timeout" => Terminal::Timeout,
            "arrived" => Terminal::Arrived,
            "shot_down" => Terminal::ShotDown,
            "left_battlefield" => Terminal::LeftBattlefield,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepInfo {
    pub terminal: Option<Terminal>,
    /// Grid cell `(x, y)` the action was taken from.
    pub cell: Option<(usize, usize)>,
    /// UCAV hit the speed ceiling during this step.
    pub cruise_violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// An episodic environment with a discrete action set and a separate
/// low-dimensional coordinate feature used by the exploration bonus.
pub trait Environment {
    fn action_count(&self) -> usize;
    fn observation_len(&self) -> usize;
    fn feature_len(&self) -> usize;
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<Step>;
    /// Coordinate feature of the current state.
    fn feature(&self) -> Vec<f64>;
}

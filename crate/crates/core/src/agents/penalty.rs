//! Intrinsic penalty: intrinsic rewards that fall below a threshold are
//! replaced by `lambda * ln(i_t)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyGuard {
    /// Fire below the alpha-quantile of the last `window` intrinsic rewards.
    Quantile,
    /// Fire below `PenaltyConfig::threshold`.
    Static,
    /// Never fire.
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyConfig {
    pub guard: PenaltyGuard,
    pub alpha: f64,
    pub window: usize,
    pub lambda: f64,
    /// Lower bound applied before the logarithm.
    pub floor: f64,
    /// Used only by the static guard.
    pub threshold: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            guard: PenaltyGuard::Quantile,
            alpha: 0.1,
            window: 10_000,
            lambda: 0.1,
            floor: 1e-8,
            threshold: 0.0,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("penalty alpha must lie in (0, 1)"));
        }
        if self.window < 2 {
            return Err(Error::config("penalty window must hold at least 2 entries"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 0.5) {
            return Err(Error::config("penalty lambda must lie in (0, 0.5]"));
        }
        if !(self.floor > 0.0) {
            return Err(Error::config("penalty floor must be positive"));
        }
        if !self.threshold.is_finite() {
            return Err(Error::config("static penalty threshold must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTracker {
    config: PenaltyConfig,
    history: VecDeque<f64>,
    /// `history` in ascending order, for quantile lookups.
    sorted: Vec<f64>,
}

impl PenaltyTracker {
    pub fn new(config: PenaltyConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            history: VecDeque::with_capacity(config.window),
            sorted: Vec::with_capacity(config.window),
            config,
        })
    }

    pub fn config(&self) -> &PenaltyConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Quantile with linear interpolation between order statistics.
    pub fn quantile(&self) -> Option<f64> {
        let n = self.sorted.len();
        if n == 0 {
            return None;
        }
        let pos = self.config.alpha * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = pos - lo as f64;
        Some(self.sorted[lo] + frac * (self.sorted[hi] - self.sorted[lo]))
    }

    /// Threshold in force for the next reward, if the guard is armed.
    pub fn threshold(&self) -> Option<f64> {
        match self.config.guard {
            PenaltyGuard::Off => None,
            PenaltyGuard::Static => Some(self.config.threshold),
            PenaltyGuard::Quantile => {
                if self.history.len() * 2 >= self.config.window {
                    self.quantile()
                } else {
                    None
                }
            }
        }
    }

    /// Returns the shaped reward and whether the penalty fired. The raw
    /// value enters the history either way.
    pub fn apply(&mut self, intrinsic: f64) -> (f64, bool) {
        let fired = self.threshold().is_some_and(|t| intrinsic < t);
        let shaped = if fired {
            self.config.lambda * intrinsic.max(self.config.floor).ln()
        } else {
            intrinsic
        };
        self.record(intrinsic);
        (shaped, fired)
    }

    fn record(&mut self, value: f64) {
        if self.history.len() == self.config.window {
            let old = self.history.pop_front().expect("window is non-empty");
            let at = self.sorted.partition_point(|v| v.total_cmp(&old).is_lt());
            self.sorted.remove(at);
        }
        self.history.push_back(value);
        let at = self.sorted.partition_point(|v| v.total_cmp(&value).is_lt());
        self.sorted.insert(at, value);
    }
}

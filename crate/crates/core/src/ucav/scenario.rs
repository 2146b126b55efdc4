//! Declarative mission scenarios, stored as TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dynamics::{UcavParams, UcavState};
use super::missile::MissileParams;
use crate::encoding::{Axis, EcvSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamSite {
    /// Ground position (x, y) in km.
    pub center: [f64; 2],
    /// Horizontal engagement radius in km.
    pub engagement_radius_km: f64,
    /// Minimum time between launches from this site.
    pub cooldown_s: f64,
    /// Targets below this altitude are not engaged.
    #[serde(default)]
    pub detection_floor_km: f64,
}

impl SamSite {
    pub fn covers(&self, p: [f64; 3]) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        p[2] >= self.detection_floor_km
            && dx * dx + dy * dy <= self.engagement_radius_km * self.engagement_radius_km
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Bounds {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        [
            p[0].clamp(self.min[0], self.max[0]),
            p[1].clamp(self.min[1], self.max[1]),
            p[2].clamp(self.min[2], self.max[2]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartState {
    pub position: [f64; 3],
    pub speed: f64,
    pub heading_deg: f64,
    #[serde(default)]
    pub path_angle_deg: f64,
    /// Uniform jitter applied to the horizontal start position on reset.
    #[serde(default)]
    pub jitter_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetPoint {
    pub position: [f64; 3],
    pub arrival_radius_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpec {
    pub shot_down: f64,
    pub arrived: f64,
    pub left_battlefield: f64,
    pub cruise_violation: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self {
            shot_down: -30.0,
            arrived: 30.0,
            left_battlefield: -30.0,
            cruise_violation: -0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    /// ECV nodes for (x, y, z); the sum is the coordinate feature length.
    pub coordinate_bins: [usize; 3],
    /// ECV nodes per unit-circle axis for angle encodings.
    pub angle_bins: usize,
    /// Missile distances are normalized by this range and saturate at 1.
    pub sensor_range_km: f64,
}

impl Default for ObservationSpec {
    fn default() -> Self {
        Self {
            coordinate_bins: [13, 13, 7],
            angle_bins: 10,
            sensor_range_km: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub physics: UcavParams,
    #[serde(default)]
    pub missile: MissileParams,
    pub bounds: Bounds,
    pub start: StartState,
    pub target: TargetPoint,
    #[serde(default)]
    pub sam_sites: Vec<SamSite>,
    /// Episode length in decision steps.
    pub time_limit_steps: usize,
    /// Integration steps of `physics.dt` per decision step.
    pub decision_substeps: usize,
    pub kill_radius_km: f64,
    #[serde(default)]
    pub rewards: RewardSpec,
    #[serde(default)]
    pub observation: ObservationSpec,
}

impl Default for Scenario {
    /// A 60 x 60 x 12 km battlefield with three overlapping SAM circles
    /// between the start and the target.
    fn default() -> Self {
        Self {
            physics: UcavParams::default(),
            missile: MissileParams::default(),
            bounds: Bounds {
                min: [0.0, 0.0, 0.0],
                max: [60.0, 60.0, 12.0],
            },
            start: StartState {
                position: [5.0, 30.0, 4.0],
                speed: 250.0,
                heading_deg: 0.0,
                path_angle_deg: 0.0,
                jitter_km: 0.0,
            },
            target: TargetPoint {
                position: [55.0, 30.0, 4.0],
                arrival_radius_km: 2.0,
            },
            sam_sites: vec![
                SamSite { center: [25.0, 23.0], engagement_radius_km: 10.0, cooldown_s: 15.0, detection_floor_km: 1.0 },
                SamSite { center: [25.0, 37.0], engagement_radius_km: 10.0, cooldown_s: 15.0, detection_floor_km: 1.0 },
                SamSite { center: [38.0, 30.0], engagement_radius_km: 9.0, cooldown_s: 15.0, detection_floor_km: 1.0 },
            ],
            time_limit_steps: 600,
            decision_substeps: 10,
            kill_radius_km: 0.5,
            rewards: RewardSpec::default(),
            observation: ObservationSpec::default(),
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::config(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        for i in 0..3 {
            if !(self.bounds.max[i] > self.bounds.min[i]) {
                return Err(Error::config("battlefield bounds need min < max on every axis"));
            }
        }
        if !self.bounds.contains(self.target.position) {
            return Err(Error::config("target lies outside the battlefield"));
        }
        if !self.bounds.contains(self.start.position) {
            return Err(Error::config("start lies outside the battlefield"));
        }
        if !(self.kill_radius_km > 0.0) {
            return Err(Error::config("kill_radius_km must be positive"));
        }
        if !(self.target.arrival_radius_km > 0.0) {
            return Err(Error::config("arrival_radius_km must be positive"));
        }
        if self.time_limit_steps == 0 || self.decision_substeps == 0 {
            return Err(Error::config("time_limit_steps and decision_substeps must be positive"));
        }
        if !(self.start.speed >= self.physics.v_min && self.start.speed <= self.physics.v_max) {
            return Err(Error::config("start speed outside [v_min, v_max]"));
        }
        if !(self.missile.speed > 0.0 && self.missile.lifetime_s > 0.0) {
            return Err(Error::config("missile speed and lifetime must be positive"));
        }
        for site in &self.sam_sites {
            if !(site.engagement_radius_km > 0.0) || site.cooldown_s < 0.0 {
                return Err(Error::config("SAM sites need a positive radius and non-negative cooldown"));
            }
        }
        if self.observation.coordinate_bins.iter().any(|&b| b < 2) || self.observation.angle_bins < 2 {
            return Err(Error::config("observation bins must be at least 2"));
        }
        if !(self.observation.sensor_range_km > 0.0) {
            return Err(Error::config("sensor_range_km must be positive"));
        }
        Ok(())
    }

    /// ECV spec of the battlefield coordinates.
    pub fn coordinate_spec(&self) -> Result<EcvSpec> {
        let b = &self.observation.coordinate_bins;
        EcvSpec::new(vec![
            Axis::new("x", self.bounds.min[0], self.bounds.max[0], b[0])?,
            Axis::new("y", self.bounds.min[1], self.bounds.max[1], b[1])?,
            Axis::new("z", self.bounds.min[2], self.bounds.max[2], b[2])?,
        ])
    }

    /// Initial aircraft state with cruise controls.
    pub fn start_state(&self) -> UcavState {
        UcavState {
            x: self.start.position[0],
            y: self.start.position[1],
            z: self.start.position[2],
            v: self.start.speed,
            psi: self.start.heading_deg.to_radians(),
            gamma: self.start.path_angle_deg.to_radians(),
            thrust: self.physics.cruise_thrust_kn,
            load: self.physics.cruise_load,
            bank: self.physics.cruise_bank_deg.to_radians(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid_and_roundtrips() {
        let s = Scenario::default();
        s.validate().unwrap();
        let back = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.coordinate_spec().unwrap().len(), 33);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = Scenario::default().to_toml_string();
        text.push_str("\nbogus = 1\n");
        let err = Scenario::from_toml_str(&text).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn target_outside_bounds_is_rejected() {
        let mut s = Scenario::default();
        s.target.position = [70.0, 30.0, 4.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn site_coverage_respects_floor() {
        let site = SamSite { center: [0.0, 0.0], engagement_radius_km: 5.0, cooldown_s: 1.0, detection_floor_km: 1.0 };
        assert!(site.covers([3.0, 3.0, 2.0]));
        assert!(!site.covers([3.0, 3.0, 0.5]));
        assert!(!site.covers([4.0, 4.0, 2.0]));
    }
}

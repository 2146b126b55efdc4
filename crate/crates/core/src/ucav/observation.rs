//! Observation vector and coordinate feature for the UCAV environment.
//!
//! Observation layout, in order:
//!
//! | block | length |
//! |-------|--------|
//! | ECV positions of the 5 most recent steps, newest first | `5 * pos_len` |
//! | angle encodings of (gamma, psi, bank) for the 2 most recent steps | `6 * angle_len` |
//! | `V / v_max`, `n / load_max` | 2 |
//! | nearest-missile distance / sensor range, saturating at 1 (1 = none) | 1 |
//! | horizontal bearing relative to heading, vertical bearing | `2 * angle_len` (zeros when none) |
//!
//! `pos_len` is the coordinate feature length (33 by default) and
//! `angle_len = 2 * angle_bins`.

use std::collections::VecDeque;

use super::dynamics::UcavState;
use super::missile::Missile;
use super::scenario::Scenario;
use super::vec3::{norm, sub};
use crate::encoding::{ecv_encode_into, encode_angle_into, EcvSpec};
use crate::error::Result;

pub const POSITION_HISTORY: usize = 5;
pub const ANGLE_HISTORY: usize = 2;

/// Recent aircraft states, newest first. Padded with the start state.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightHistory {
    states: VecDeque<UcavState>,
}

impl FlightHistory {
    pub fn new(start: UcavState) -> Self {
        Self {
            states: std::iter::repeat(start).take(POSITION_HISTORY).collect(),
        }
    }

    pub fn push(&mut self, state: UcavState) {
        self.states.pop_back();
        self.states.push_front(state);
    }

    pub fn latest(&self) -> &UcavState {
        &self.states[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &UcavState> {
        self.states.iter()
    }
}

#[derive(Debug, Clone)]
pub struct ObservationBuilder {
    coords: EcvSpec,
    angles: EcvSpec,
    v_max: f64,
    load_max: f64,
    sensor_range: f64,
    bounds_min: [f64; 3],
    bounds_max: [f64; 3],
}

impl ObservationBuilder {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        Ok(Self {
            coords: scenario.coordinate_spec()?,
            angles: EcvSpec::unit_circle(scenario.observation.angle_bins)?,
            v_max: scenario.physics.v_max,
            load_max: scenario.physics.limits.load_max.max(1e-9),
            sensor_range: scenario.observation.sensor_range_km,
            bounds_min: scenario.bounds.min,
            bounds_max: scenario.bounds.max,
        })
    }

    pub fn position_len(&self) -> usize {
        self.coords.len()
    }

    pub fn angle_len(&self) -> usize {
        self.angles.len()
    }

    pub fn len(&self) -> usize {
        let a = self.angle_len();
        POSITION_HISTORY * self.position_len() + 2 * 3 * a + 2 + 1 + 2 * a
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        [
            p[0].clamp(self.bounds_min[0], self.bounds_max[0]),
            p[1].clamp(self.bounds_min[1], self.bounds_max[1]),
            p[2].clamp(self.bounds_min[2], self.bounds_max[2]),
        ]
    }

    /// ECV of the clamped aircraft position.
    pub fn coordinate_feature(&self, state: &UcavState) -> Vec<f64> {
        let mut out = vec![0.0; self.position_len()];
        ecv_encode_into(&self.clamp(state.position()), &self.coords, &mut out)
            .expect("clamped position is in range");
        out
    }

    pub fn build(&self, history: &FlightHistory, missiles: &[Missile]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let mut at = 0;
        let p = self.position_len();
        for s in history.iter().take(POSITION_HISTORY) {
            ecv_encode_into(&self.clamp(s.position()), &self.coords, &mut out[at..at + p])
                .expect("clamped position is in range");
            at += p;
        }
        let a = self.angle_len();
        for s in history.iter().take(ANGLE_HISTORY) {
            for angle in [s.gamma, s.psi, s.bank] {
                encode_angle_into(angle, &self.angles, &mut out[at..at + a]).expect("angles always encode");
                at += a;
            }
        }
        let now = history.latest();
        out[at] = now.v / self.v_max;
        out[at + 1] = now.load / self.load_max;
        at += 2;

        let nearest = missiles
            .iter()
            .filter(|m| m.active)
            .map(|m| (m.distance_km(now.position()), m))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match nearest {
            None => out[at] = 1.0,
            Some((d, m)) => {
                out[at] = (d / self.sensor_range).min(1.0);
                let rel = sub(m.position, now.position());
                let horizontal = rel[1].atan2(rel[0]) - now.psi;
                let vertical = rel[2].atan2(norm([rel[0], rel[1], 0.0]));
                encode_angle_into(horizontal, &self.angles, &mut out[at + 1..at + 1 + a])
                    .expect("angles always encode");
                encode_angle_into(vertical, &self.angles, &mut out[at + 1 + a..at + 1 + 2 * a])
                    .expect("angles always encode");
            }
        }
        out
    }
}

//! Proportional-navigation missiles.
//!
//! Pure PN: with relative position `r` and relative velocity `w` of the
//! target, the line-of-sight rotation rate is `omega = r x w / |r|^2` and the
//! commanded acceleration is `a = N' * (omega x v_m)`, which is always
//! perpendicular to the missile velocity. Speed is held constant.

use serde::{Deserialize, Serialize};

use super::dynamics::UcavState;
use super::vec3::{add, cross, dot, norm, scale, sub};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissileParams {
    pub speed: f64,
    pub nav_gain: f64,
    /// Flight time after which the missile self-destructs.
    pub lifetime_s: f64,
}

impl Default for MissileParams {
    fn default() -> Self {
        Self {
            speed: 600.0,
            nav_gain: 3.0,
            lifetime_s: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Missile {
    /// km
    pub position: [f64; 3],
    /// m/s
    pub velocity: [f64; 3],
    pub nav_gain: f64,
    pub active: bool,
    /// Set when the missile reached zero range with the target.
    pub hit: bool,
    pub age_s: f64,
    pub site: usize,
}

impl Missile {
    /// Launches from `position` with its velocity pointed at `target`.
    pub fn launch(position: [f64; 3], target: [f64; 3], params: &MissileParams, site: usize) -> Self {
        let los = sub(target, position);
        let d = norm(los);
        let dir = if d > 0.0 { scale(los, 1.0 / d) } else { [1.0, 0.0, 0.0] };
        Self {
            position,
            velocity: scale(dir, params.speed),
            nav_gain: params.nav_gain,
            active: true,
            hit: false,
            age_s: 0.0,
            site,
        }
    }

    pub fn speed(&self) -> f64 {
        norm(self.velocity)
    }

    pub fn distance_km(&self, point: [f64; 3]) -> f64 {
        norm(sub(point, self.position))
    }
}

/// Commanded PN acceleration (m/s^2) against a target at `target_pos` (km)
/// moving with `target_vel` (m/s). `None` when the range is zero.
pub fn pn_acceleration(missile: &Missile, target_pos: [f64; 3], target_vel: [f64; 3]) -> Option<[f64; 3]> {
    let r = scale(sub(target_pos, missile.position), 1000.0);
    let r2 = dot(r, r);
    if r2 < 1e-12 {
        return None;
    }
    let w = sub(target_vel, missile.velocity);
    let omega = scale(cross(r, w), 1.0 / r2);
    Some(scale(cross(omega, missile.velocity), missile.nav_gain))
}

/// Advances an active missile by `dt` seconds toward `target`.
pub fn missile_pn_step(missile: &Missile, target: &UcavState, dt: f64, lifetime_s: f64) -> Missile {
    let mut next = missile.clone();
    if !missile.active {
        return next;
    }
    match pn_acceleration(missile, target.position(), target.velocity()) {
        None => {
            next.active = false;
            next.hit = true;
        }
        Some(acc) => {
            let speed = missile.speed();
            let v = add(missile.velocity, scale(acc, dt));
            let v = scale(v, speed / norm(v));
            next.velocity = v;
            next.position = add(missile.position, scale(v, dt / 1000.0));
            next.age_s += dt;
            if next.age_s >= lifetime_s {
                next.active = false;
            }
        }
    }
    next
}

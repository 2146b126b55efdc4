//! 3-DOF point-mass flight model.
//!
//! Positions are in km, speed in m/s, thrust in kN and angles in radians.
//! One explicit Euler step evaluates every derivative at the old state:
//!
//! ```text
//! x' = V cos(gamma) cos(psi)        y' = V cos(gamma) sin(psi)     z' = V sin(gamma)
//! V' = (T - D) / m - g sin(gamma)   D  = drag_coeff * V^2
//! psi'   = g n sin(phi) / (V cos(gamma))
//! gamma' = (g / V) (n cos(phi) - cos(gamma))
//! ```
//!
//! Speed is clamped to `[v_min, v_max]` and the path angle to
//! `[-gamma_limit, gamma_limit]`, which keeps both divisions finite.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcavState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v: f64,
    pub psi: f64,
    pub gamma: f64,
    pub thrust: f64,
    pub load: f64,
    pub bank: f64,
}

impl UcavState {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Velocity vector in m/s.
    pub fn velocity(&self) -> [f64; 3] {
        let (sg, cg) = self.gamma.sin_cos();
        let (sp, cp) = self.psi.sin_cos();
        [self.v * cg * cp, self.v * cg * sp, self.v * sg]
    }

    fn check_finite(&self) -> Result<()> {
        let fields = [
            ("x", self.x),
            ("y", self.y),
            ("z", self.z),
            ("V", self.v),
            ("psi", self.psi),
            ("gamma", self.gamma),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::non_finite(format!("UCAV state variable {name}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlLimits {
    pub thrust_min_kn: f64,
    pub thrust_max_kn: f64,
    pub thrust_step_kn: f64,
    pub load_min: f64,
    pub load_max: f64,
    pub load_step: f64,
    pub bank_max_deg: f64,
    pub bank_step_deg: f64,
}

impl Default for ControlLimits {
    fn default() -> Self {
        Self {
            thrust_min_kn: 0.0,
            thrust_max_kn: 100.0,
            thrust_step_kn: 5.0,
            load_min: 0.0,
            load_max: 3.0,
            load_step: 0.25,
            bank_max_deg: 60.0,
            bank_step_deg: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcavParams {
    pub mass_kg: f64,
    pub gravity: f64,
    /// Drag in newtons per (m/s)^2.
    pub drag_coeff: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub dt: f64,
    pub gamma_limit_deg: f64,
    pub limits: ControlLimits,
    pub cruise_thrust_kn: f64,
    pub cruise_load: f64,
    pub cruise_bank_deg: f64,
}

impl Default for UcavParams {
    fn default() -> Self {
        let cruise_thrust_kn = 50.0;
        let cruise_speed = 250.0;
        Self {
            mass_kg: 9000.0,
            gravity: 9.81,
            drag_coeff: Self::drag_for_cruise(cruise_thrust_kn, cruise_speed),
            v_min: 100.0,
            v_max: 300.0,
            dt: 0.1,
            gamma_limit_deg: 80.0,
            limits: ControlLimits::default(),
            cruise_thrust_kn,
            cruise_load: 1.0,
            cruise_bank_deg: 0.0,
        }
    }
}

impl UcavParams {
    /// Drag coefficient under which `thrust_kn` exactly balances drag at `speed`.
    pub fn drag_for_cruise(thrust_kn: f64, speed: f64) -> f64 {
        thrust_kn * 1000.0 / (speed * speed)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_kg", self.mass_kg),
            ("gravity", self.gravity),
            ("drag_coeff", self.drag_coeff),
            ("v_min", self.v_min),
            ("v_max", self.v_max),
            ("dt", self.dt),
            ("gamma_limit_deg", self.gamma_limit_deg),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("physics parameter {name} must be positive, got {v}")));
            }
        }
        if self.dt > 0.1 {
            return Err(Error::config(format!("dt must be at most 0.1 s, got {}", self.dt)));
        }
        if self.v_min >= self.v_max {
            return Err(Error::config("v_min must be below v_max"));
        }
        if self.gamma_limit_deg >= 90.0 {
            return Err(Error::config("gamma_limit_deg must be below 90"));
        }
        let l = &self.limits;
        if !(l.thrust_min_kn <= self.cruise_thrust_kn && self.cruise_thrust_kn <= l.thrust_max_kn)
            || !(l.load_min <= self.cruise_load && self.cruise_load <= l.load_max)
            || self.cruise_bank_deg.abs() > l.bank_max_deg
        {
            return Err(Error::config("cruise controls must lie inside the control limits"));
        }
        if l.thrust_step_kn <= 0.0 || l.load_step <= 0.0 || l.bank_step_deg <= 0.0 {
            return Err(Error::config("control increments must be positive"));
        }
        Ok(())
    }

    pub fn gamma_limit(&self) -> f64 {
        self.gamma_limit_deg.to_radians()
    }

    pub fn bank_max(&self) -> f64 {
        self.limits.bank_max_deg.to_radians()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Time derivatives `(x', y', z', V', psi', gamma')` with positions in km/s.
pub fn derivatives(s: &UcavState, p: &UcavParams) -> [f64; 6] {
    let (sg, cg) = s.gamma.sin_cos();
    let (sp, cp) = s.psi.sin_cos();
    let (sb, cb) = s.bank.sin_cos();
    let drag = p.drag_coeff * s.v * s.v;
    [
        s.v * cg * cp / 1000.0,
        s.v * cg * sp / 1000.0,
        s.v * sg / 1000.0,
        (s.thrust * 1000.0 - drag) / p.mass_kg - p.gravity * sg,
        p.gravity * s.load * sb / (s.v * cg),
        p.gravity / s.v * (s.load * cb - cg),
    ]
}

/// One explicit Euler step of length `params.dt`.
pub fn integrate_dynamics(state: &UcavState, params: &UcavParams) -> Result<UcavState> {
    state.check_finite()?;
    let d = derivatives(state, params);
    let dt = params.dt;
    let limit = params.gamma_limit();
    let next = UcavState {
        x: state.x + d[0] * dt,
        y: state.y + d[1] * dt,
        z: state.z + d[2] * dt,
        v: (state.v + d[3] * dt).clamp(params.v_min, params.v_max),
        psi: wrap_angle(state.psi + d[4] * dt),
        gamma: (state.gamma + d[5] * dt).clamp(-limit, limit),
        ..*state
    };
    next.check_finite()?;
    Ok(next)
}

/// Decoded form of one of the 28 discrete actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlAction {
    /// Per-input direction in {-1, 0, +1} for (thrust, load, bank).
    Delta { thrust: i8, load: i8, bank: i8 },
    /// Restore the cruise controls.
    Cruise,
}

pub const ACTION_COUNT: usize = 28;
pub const CRUISE_ACTION: usize = 27;
/// Index of the all-zero delta.
pub const HOLD_ACTION: usize = 13;

/// Indices 0..27 enumerate {-1, 0, +1}^3 over (thrust, load, bank) with
/// thrust as the most significant digit; 27 resets to cruise.
pub fn decode_action(index: usize) -> Result<ControlAction> {
    match index {
        CRUISE_ACTION => Ok(ControlAction::Cruise),
        i if i < CRUISE_ACTION => Ok(ControlAction::Delta {
            thrust: (i / 9) as i8 - 1,
            load: ((i / 3) % 3) as i8 - 1,
            bank: (i % 3) as i8 - 1,
        }),
        i => Err(Error::usage(format!("UCAV action {i} out of range 0..{ACTION_COUNT}"))),
    }
}

/// Applies an action to the control inputs of `state`, clamping to limits.
pub fn apply_action(state: &mut UcavState, action: ControlAction, params: &UcavParams) {
    let l = &params.limits;
    match action {
        ControlAction::Cruise => {
            state.thrust = params.cruise_thrust_kn;
            state.load = params.cruise_load;
            state.bank = params.cruise_bank_deg.to_radians();
        }
        ControlAction::Delta { thrust, load, bank } => {
            state.thrust = (state.thrust + f64::from(thrust) * l.thrust_step_kn)
                .clamp(l.thrust_min_kn, l.thrust_max_kn);
            state.load = (state.load + f64::from(load) * l.load_step).clamp(l.load_min, l.load_max);
            let bank_max = params.bank_max();
            state.bank = (state.bank + f64::from(bank) * l.bank_step_deg.to_radians())
                .clamp(-bank_max, bank_max);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn level(v: f64) -> UcavState {
        UcavState {
            x: 10.0,
            y: 10.0,
            z: 3.0,
            v,
            psi: 0.0,
            gamma: 0.0,
            thrust: 50.0,
            load: 1.0,
            bank: 0.0,
        }
    }

    #[test]
    fn steady_level_flight_is_an_equilibrium() {
        let p = UcavParams::default();
        let s = level(250.0);
        let d = derivatives(&s, &p);
        assert_eq!(d[2], 0.0);
        assert_eq!(d[3], 0.0);
        assert_eq!(d[5], 0.0);
        let mut cur = s;
        for _ in 0..1000 {
            let next = integrate_dynamics(&cur, &p).unwrap();
            assert!((next.z - cur.z).abs() <= 1e-6);
            cur = next;
        }
        assert_eq!(cur.v, 250.0);
    }

    #[test]
    fn straight_line_advances_x() {
        let p = UcavParams::default();
        let s = UcavState { v: 200.0, thrust: 0.0, ..level(200.0) };
        let n = integrate_dynamics(&s, &p).unwrap();
        assert_relative_eq!(n.x - s.x, 0.02, epsilon = 1e-12);
        assert_eq!(n.y, s.y);
        assert_eq!(n.z, s.z);
    }

    #[test]
    fn banked_turn_changes_heading() {
        let p = UcavParams::default();
        let s = UcavState { bank: 30f64.to_radians(), load: 2.0, ..level(250.0) };
        let n = integrate_dynamics(&s, &p).unwrap();
        assert!(n.psi > 0.0);
    }

    #[test]
    fn speed_is_clamped() {
        let p = UcavParams::default();
        let mut s = UcavState { thrust: 100.0, ..level(299.9) };
        for _ in 0..100 {
            s = integrate_dynamics(&s, &p).unwrap();
        }
        assert_eq!(s.v, p.v_max);
        let mut s = UcavState { thrust: 0.0, ..level(101.0) };
        for _ in 0..200 {
            s = integrate_dynamics(&s, &p).unwrap();
        }
        assert_eq!(s.v, p.v_min);
    }

    #[test]
    fn non_finite_state_is_named() {
        let p = UcavParams::default();
        let s = UcavState { gamma: f64::NAN, ..level(250.0) };
        let err = integrate_dynamics(&s, &p).unwrap_err();
        assert!(err.to_string().contains("gamma"));
    }

    #[test]
    fn action_table() {
        assert_eq!(decode_action(HOLD_ACTION).unwrap(), ControlAction::Delta { thrust: 0, load: 0, bank: 0 });
        assert_eq!(decode_action(0).unwrap(), ControlAction::Delta { thrust: -1, load: -1, bank: -1 });
        assert_eq!(decode_action(26).unwrap(), ControlAction::Delta { thrust: 1, load: 1, bank: 1 });
        assert_eq!(decode_action(27).unwrap(), ControlAction::Cruise);
        assert!(decode_action(28).is_err());
        let distinct: std::collections::HashSet<_> =
            (0..27).map(|i| format!("{:?}", decode_action(i).unwrap())).collect();
        assert_eq!(distinct.len(), 27);
    }

    #[test]
    fn hold_keeps_controls_and_cruise_resets() {
        let p = UcavParams::default();
        let mut s = UcavState { thrust: 70.0, load: 2.5, bank: 0.5, ..level(250.0) };
        let before = s;
        apply_action(&mut s, decode_action(HOLD_ACTION).unwrap(), &p);
        assert_eq!(s, before);
        apply_action(&mut s, ControlAction::Cruise, &p);
        assert_eq!((s.thrust, s.load, s.bank), (50.0, 1.0, 0.0));
    }

    #[test]
    fn thrust_increase_is_clamped_at_limit() {
        let p = UcavParams::default();
        let mut s = UcavState { thrust: 100.0, ..level(250.0) };
        apply_action(&mut s, ControlAction::Delta { thrust: 1, load: 0, bank: 0 }, &p);
        assert_eq!(s.thrust, 100.0);
        let mut s = UcavState { bank: p.bank_max(), ..level(250.0) };
        apply_action(&mut s, ControlAction::Delta { thrust: 0, load: 0, bank: 1 }, &p);
        assert_eq!(s.bank, p.bank_max());
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..20 {
            let a = wrap_angle(k as f64 * 0.9);
            assert!(a > -PI && a <= PI);
        }
        assert_eq!(wrap_angle(-PI), PI);
    }
}

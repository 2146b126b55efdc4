//! UCAV mission-execution environment.
//!
//! Each decision step applies one of 28 control actions, then integrates
//! the aircraft and all missiles for `decision_substeps` steps of
//! `physics.dt`. Within a substep the order is: aircraft, missiles, kill
//! check, arrival check, battlefield check, SAM launches.

mod dynamics;
mod missile;
mod observation;
mod record;
mod scenario;
pub(crate) mod vec3;

pub use dynamics::{
    apply_action, decode_action, derivatives, integrate_dynamics, wrap_angle, ControlAction, ControlLimits,
    UcavParams, UcavState, ACTION_COUNT, CRUISE_ACTION, HOLD_ACTION,
};
pub use missile::{missile_pn_step, pn_acceleration, Missile, MissileParams};
pub use observation::{FlightHistory, ObservationBuilder, ANGLE_HISTORY, POSITION_HISTORY};
pub use record::{read_trajectory_jsonl, replay, write_trajectory_jsonl, ActionLog, TrajectoryRecord};
pub use scenario::{Bounds, ObservationSpec, RewardSpec, SamSite, Scenario, StartState, TargetPoint};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{Environment, Step, StepInfo, Terminal};
use crate::error::{Error, Result};
use vec3::{norm, sub};

#[derive(Debug, Clone)]
pub struct UcavEnv {
    scenario: Scenario,
    builder: ObservationBuilder,
    rng: ChaCha8Rng,
    seed: u64,
    state: UcavState,
    history: FlightHistory,
    missiles: Vec<Missile>,
    /// Seconds until each site may launch again.
    cooldowns: Vec<f64>,
    launched: usize,
    steps: usize,
    done: bool,
    recording: bool,
    trajectory: Vec<TrajectoryRecord>,
    actions: Vec<usize>,
}

impl UcavEnv {
    pub fn new(scenario: Scenario, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let builder = ObservationBuilder::new(&scenario)?;
        let state = scenario.start_state();
        let sites = scenario.sam_sites.len();
        Ok(Self {
            builder,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            history: FlightHistory::new(state),
            state,
            missiles: Vec::new(),
            cooldowns: vec![0.0; sites],
            launched: 0,
            steps: 0,
            done: true,
            recording: false,
            trajectory: Vec::new(),
            actions: Vec::new(),
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self) -> &UcavState {
        &self.state
    }

    pub fn missiles(&self) -> &[Missile] {
        &self.missiles
    }

    /// Missiles launched since the last reset.
    pub fn launched(&self) -> usize {
        self.launched
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn history(&self) -> &FlightHistory {
        &self.history
    }

    pub fn builder(&self) -> &ObservationBuilder {
        &self.builder
    }

    /// Keep a per-step trajectory and action log for the current episode.
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    pub fn trajectory(&self) -> &[TrajectoryRecord] {
        &self.trajectory
    }

    /// Actions taken so far in the current episode.
    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn build_observation(&self) -> Vec<f64> {
        self.builder.build(&self.history, &self.missiles)
    }

    /// Reduced ECV of the clamped position (33 rows by default).
    pub fn coordinate_feature(&self, state: &UcavState) -> Vec<f64> {
        self.builder.coordinate_feature(state)
    }

    fn record(&mut self, reward: f64, terminal: Option<Terminal>) {
        if !self.recording {
            return;
        }
        self.trajectory.push(TrajectoryRecord::capture(
            self.steps,
            &self.state,
            &self.missiles,
            reward,
            terminal,
        ));
    }

    fn substep(&mut self) -> Result<Option<Terminal>> {
        let params = &self.scenario.physics;
        let dt = params.dt;
        self.state = integrate_dynamics(&self.state, params)?;
        let pos = self.state.position();

        let lifetime = self.scenario.missile.lifetime_s;
        let mut shot = false;
        for m in self.missiles.iter_mut().filter(|m| m.active) {
            *m = missile_pn_step(m, &self.state, dt, lifetime);
            if m.hit || m.distance_km(pos) < self.scenario.kill_radius_km {
                m.active = false;
                shot = true;
            }
        }
        if shot {
            return Ok(Some(Terminal::ShotDown));
        }
        if norm(sub(pos, self.scenario.target.position)) < self.scenario.target.arrival_radius_km {
            return Ok(Some(Terminal::Arrived));
        }
        if !self.scenario.bounds.contains(pos) {
            return Ok(Some(Terminal::LeftBattlefield));
        }

        for c in &mut self.cooldowns {
            *c -= dt;
        }
        for (i, site) in self.scenario.sam_sites.iter().enumerate() {
            let busy = self.missiles.iter().any(|m| m.active && m.site == i);
            if !busy && self.cooldowns[i] <= 0.0 && site.covers(pos) {
                let origin = [site.center[0], site.center[1], 0.0];
                self.missiles.push(Missile::launch(origin, pos, &self.scenario.missile, i));
                self.cooldowns[i] = site.cooldown_s;
                self.launched += 1;
            }
        }
        self.missiles.retain(|m| m.active);
        Ok(None)
    }
}

impl Environment for UcavEnv {
    fn action_count(&self) -> usize {
        ACTION_COUNT
    }

    fn observation_len(&self) -> usize {
        self.builder.len()
    }

    fn feature_len(&self) -> usize {
        self.builder.position_len()
    }

    fn reset(&mut self) -> Vec<f64> {
        let mut state = self.scenario.start_state();
        let jitter = self.scenario.start.jitter_km;
        if jitter > 0.0 {
            state.x += self.rng.gen_range(-jitter..=jitter);
            state.y += self.rng.gen_range(-jitter..=jitter);
            let b = &self.scenario.bounds;
            state.x = state.x.clamp(b.min[0], b.max[0]);
            state.y = state.y.clamp(b.min[1], b.max[1]);
        }
        self.state = state;
        self.history = FlightHistory::new(state);
        self.missiles.clear();
        self.cooldowns.iter_mut().for_each(|c| *c = 0.0);
        self.launched = 0;
        self.steps = 0;
        self.done = false;
        self.trajectory.clear();
        self.actions.clear();
        self.record(0.0, None);
        self.build_observation()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        if self.done {
            return Err(Error::usage("step called on a finished UCAV episode"));
        }
        let decoded = decode_action(action)?;
        apply_action(&mut self.state, decoded, &self.scenario.physics);
        if self.recording {
            self.actions.push(action);
        }

        let mut terminal = None;
        let mut cruise_violation = false;
        for _ in 0..self.scenario.decision_substeps {
            terminal = self.substep()?;
            if self.state.v >= self.scenario.physics.v_max {
                cruise_violation = true;
            }
            if terminal.is_some() {
                break;
            }
        }
        self.steps += 1;
        if terminal.is_none() && self.steps >= self.scenario.time_limit_steps {
            terminal = Some(Terminal::Timeout);
        }

        let r = &self.scenario.rewards;
        let mut reward = match terminal {
            Some(Terminal::ShotDown) => r.shot_down,
            Some(Terminal::Arrived) => r.arrived,
            Some(Terminal::LeftBattlefield) => r.left_battlefield,
            _ => 0.0,
        };
        if cruise_violation {
            reward += r.cruise_violation;
        }
        self.history.push(self.state);
        self.done = terminal.is_some();
        self.record(reward, terminal);
        Ok(Step {
            observation: self.build_observation(),
            reward,
            done: self.done,
            info: StepInfo {
                terminal,
                cell: None,
                cruise_violation,
            },
        })
    }

    fn feature(&self) -> Vec<f64> {
        self.coordinate_feature(&self.state)
    }
}

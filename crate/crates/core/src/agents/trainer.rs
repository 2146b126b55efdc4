//! The episode loop tying the policy, the exploration bonus and the replay
//! memories together.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffers::{FeatureBuffer, FeatureRecord, SilBuffer, Transition};
use super::penalty::{PenaltyConfig, PenaltyGuard, PenaltyTracker};
use super::policy::{A2cCoefficients, PolicyValueNet};
use super::returns::{bootstrapped_returns, compute_returns};
use super::rnd::{PredictorSource, RndPair};
use crate::env::{Environment, Step, Terminal};
use crate::error::{Error, Result};
use crate::nn::{sample_categorical, HiddenActivation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentVariant {
    /// A2C with self-imitation, no exploration bonus.
    #[serde(rename = "ASIL", alias = "asil")]
    Asil,
    /// Adds the distillation bonus with an online-trained predictor.
    #[serde(rename = "AIE1", alias = "aie1")]
    Aie1,
    /// Adds the intrinsic penalty.
    #[serde(rename = "AIE2", alias = "aie2")]
    Aie2,
    /// Trains the predictor from the feature memory.
    #[serde(rename = "AIE3", alias = "aie3")]
    Aie3,
}

impl AgentVariant {
    pub const ALL: [AgentVariant; 4] = [Self::Asil, Self::Aie1, Self::Aie2, Self::Aie3];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Asil => "ASIL",
            Self::Aie1 => "AIE1",
            Self::Aie2 => "AIE2",
            Self::Aie3 => "AIE3",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ASIL" => Ok(Self::Asil),
            "AIE1" => Ok(Self::Aie1),
            "AIE2" => Ok(Self::Aie2),
            "AIE3" => Ok(Self::Aie3),
            _ => Err(Error::config(format!("unknown variant '{s}' (expected ASIL, AIE1, AIE2 or AIE3)"))),
        }
    }

    pub fn uses_bonus(self) -> bool {
        self != Self::Asil
    }

    pub fn uses_penalty(self) -> bool {
        matches!(self, Self::Aie2 | Self::Aie3)
    }

    pub fn uses_feature_replay(self) -> bool {
        self == Self::Aie3
    }
}

impl std::fmt::Display for AgentVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub gamma: f64,
    pub lr: f64,
    pub predictor_lr: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Global gradient-norm clip for the policy network; 0 disables it.
    pub max_grad_norm: f64,
    /// Steps per actor-critic update; 0 uses whole episodes.
    pub rollout_len: usize,
    pub policy_hidden: Vec<usize>,
    pub rnd_hidden: Vec<usize>,
    pub rnd_output: usize,
    pub activation: HiddenActivation,
    pub sil_beta: f64,
    /// Self-imitation and predictor rounds after each actor-critic update.
    pub sil_passes: usize,
    pub sil_batch: usize,
    pub sil_capacity: usize,
    pub priority_eps: f64,
    pub feature_capacity: usize,
    pub predictor_batch: usize,
    /// Multiplier on the (possibly penalized) bonus before it joins the
    /// extrinsic reward.
    pub intrinsic_coef: f64,
    /// Divide raw bonuses by their running standard deviation.
    pub normalize_intrinsic: bool,
    pub penalty: PenaltyConfig,
    /// Empty the feature memory at the start of every episode.
    pub clear_feature_buffer_each_episode: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lr: 7e-4,
            predictor_lr: 1e-3,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_grad_norm: 0.5,
            rollout_len: 0,
            policy_hidden: vec![128, 128],
            rnd_hidden: vec![64, 64],
            rnd_output: 32,
            activation: HiddenActivation::Relu,
            sil_beta: 0.01,
            sil_passes: 4,
            sil_batch: 64,
            sil_capacity: 100_000,
            priority_eps: 1e-5,
            feature_capacity: 100_000,
            predictor_batch: 64,
            intrinsic_coef: 1.0,
            normalize_intrinsic: false,
            penalty: PenaltyConfig::default(),
            clear_feature_buffer_each_episode: false,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lr", self.lr),
            ("predictor_lr", self.predictor_lr),
            ("sil_beta", self.sil_beta),
            ("priority_eps", self.priority_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma must lie in [0, 1]"));
        }
        for (name, v) in [
            ("value_coef", self.value_coef),
            ("entropy_coef", self.entropy_coef),
            ("max_grad_norm", self.max_grad_norm),
            ("intrinsic_coef", self.intrinsic_coef),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be non-negative")));
            }
        }
        if self.sil_batch == 0 || self.predictor_batch == 0 {
            return Err(Error::config("batch sizes must be positive"));
        }
        if self.sil_capacity == 0 || self.feature_capacity == 0 {
            return Err(Error::config("buffer capacities must be positive"));
        }
        if self.rnd_output == 0 || self.policy_hidden.contains(&0) || self.rnd_hidden.contains(&0) {
            return Err(Error::config("layer widths must be positive"));
        }
        self.penalty.validate()
    }

    fn clip(&self) -> Option<f64> {
        (self.max_grad_norm > 0.0).then_some(self.max_grad_norm)
    }
}

/// Welford running mean and variance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStat {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        if self.count < 2 {
            1.0
        } else {
            (self.m2 / self.count as f64).sqrt()
        }
    }
}

/// Per-episode summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based.
    pub episode: u64,
    pub extrinsic_return: f64,
    /// Sum of the bonuses added to the reward, after the penalty.
    pub intrinsic_sum: f64,
    pub penalty_count: usize,
    /// Share of sampled self-imitation transitions with positive advantage.
    pub sil_updated_fraction: f64,
    /// Mean predictor loss over this episode's predictor rounds.
    pub predictor_loss: Option<f64>,
    pub predictor_losses: Vec<f64>,
    pub a2c_loss: f64,
    pub length: usize,
    pub terminal: Option<Terminal>,
    pub actions: Vec<usize>,
}

/// Complete learning state for exact resumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub version: u32,
    pub variant: AgentVariant,
    pub config: AgentConfig,
    pub policy: PolicyValueNet,
    pub rnd: Option<RndPair>,
    pub sil: SilBuffer,
    pub features: FeatureBuffer,
    pub penalty: PenaltyTracker,
    pub normalizer: RunningStat,
    pub rng: ChaCha8Rng,
    pub episodes: u64,
}

const CHECKPOINT_VERSION: u32 = 1;
const INIT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    variant: AgentVariant,
    config: AgentConfig,
    policy: PolicyValueNet,
    rnd: Option<RndPair>,
    sil: SilBuffer,
    features: FeatureBuffer,
    penalty: PenaltyTracker,
    normalizer: RunningStat,
    rng: ChaCha8Rng,
    episodes: u64,
}

struct Segment {
    states: Vec<f64>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
}

impl Segment {
    fn new() -> Self {
        Self { states: Vec::new(), actions: Vec::new(), rewards: Vec::new() }
    }

    fn len(&self) -> usize {
        self.actions.len()
    }

    fn clear(&mut self) {
        self.states.clear();
        self.actions.clear();
        self.rewards.clear();
    }
}

impl Agent {
    /// Builds networks for an environment with the given shapes. Policy
    /// and predictor initializations are drawn from separate seeded
    /// streams, so every variant starts from the same policy.
    pub fn new(
        variant: AgentVariant,
        config: AgentConfig,
        observation_len: usize,
        feature_len: usize,
        actions: usize,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut init = ChaCha8Rng::seed_from_u64(seed ^ INIT_STREAM);
        let policy = PolicyValueNet::new(
            observation_len,
            &config.policy_hidden,
            actions,
            config.activation,
            config.lr,
            &mut init,
        )?;
        let rnd = if variant.uses_bonus() {
            let mut sizes = vec![feature_len];
            sizes.extend_from_slice(&config.rnd_hidden);
            sizes.push(config.rnd_output);
            let mut rnd_init = ChaCha8Rng::seed_from_u64(seed ^ INIT_STREAM.rotate_left(17));
            Some(RndPair::new(&sizes, config.activation, config.predictor_lr, &mut rnd_init)?)
        } else {
            None
        };
        Ok(Self {
            variant,
            sil: SilBuffer::new(config.sil_capacity, config.priority_eps)?,
            features: FeatureBuffer::new(config.feature_capacity)?,
            penalty: PenaltyTracker::new(config.penalty.clone())?,
            normalizer: RunningStat::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            episodes: 0,
            config,
            policy,
            rnd,
        })
    }

    pub fn for_env<E: Environment>(variant: AgentVariant, config: AgentConfig, env: &E, seed: u64) -> Result<Self> {
        Self::new(variant, config, env.observation_len(), env.feature_len(), env.action_count(), seed)
    }

    pub fn variant(&self) -> AgentVariant {
        self.variant
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn policy(&self) -> &PolicyValueNet {
        &self.policy
    }

    pub fn rnd(&self) -> Option<&RndPair> {
        self.rnd.as_ref()
    }

    pub fn sil_buffer(&self) -> &SilBuffer {
        &self.sil
    }

    pub fn feature_buffer(&self) -> &FeatureBuffer {
        &self.features
    }

    pub fn penalty(&self) -> &PenaltyTracker {
        &self.penalty
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    fn check_env<E: Environment>(&self, env: &E) -> Result<()> {
        if env.observation_len() != self.policy.input_len() {
            return Err(Error::config(format!(
                "environment observation length {} does not match policy input {}",
                env.observation_len(),
                self.policy.input_len()
            )));
        }
        if env.action_count() != self.policy.actions() {
            return Err(Error::config("environment action count does not match the policy head"));
        }
        if let Some(rnd) = &self.rnd {
            if env.feature_len() != rnd.input_len() {
                return Err(Error::config("environment feature length does not match the predictor"));
            }
        }
        Ok(())
    }

    /// Samples an action from the current policy.
    pub fn act(&mut self, observation: &[f64]) -> Result<usize> {
        let (probs, _) = self.policy.evaluate(observation)?;
        sample_categorical(&probs, &mut self.rng)
    }

    /// Most probable action; ties go to the lowest index.
    pub fn act_greedy(&self, observation: &[f64]) -> Result<usize> {
        let (probs, _) = self.policy.evaluate(observation)?;
        Ok(probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0)
    }

    pub fn train_episode<E: Environment>(&mut self, env: &mut E) -> Result<EpisodeRecord> {
        self.train_episode_with(env, |_, _, _| {})
    }

    /// Runs one episode, learning as it goes. `observer` sees the
    /// environment after every step together with the action and result.
    pub fn train_episode_with<E, F>(&mut self, env: &mut E, mut observer: F) -> Result<EpisodeRecord>
    where
        E: Environment,
        F: FnMut(&E, usize, &Step),
    {
        self.check_env(env)?;
        if self.config.clear_feature_buffer_each_episode {
            self.features.clear();
        }
        let width = self.policy.input_len();
        let mut obs = env.reset();
        let mut episode = Segment::new();
        let mut segment = Segment::new();
        let mut episode_features: Vec<FeatureRecord> = Vec::new();
        let mut record = EpisodeRecord {
            episode: self.episodes + 1,
            extrinsic_return: 0.0,
            intrinsic_sum: 0.0,
            penalty_count: 0,
            sil_updated_fraction: 0.0,
            predictor_loss: None,
            predictor_losses: Vec::new(),
            a2c_loss: 0.0,
            length: 0,
            terminal: None,
            actions: Vec::new(),
        };
        let mut a2c_updates = 0usize;
        let (mut sil_active, mut sil_sampled) = (0usize, 0usize);

        loop {
            let action = self.act(&obs)?;
            let step = env.step(action)?;
            observer(env, action, &step);

            let mut intrinsic = 0.0;
            if let Some(rnd) = &self.rnd {
                let rec = rnd.record(&env.feature())?;
                let mut raw = rnd.intrinsic_against(&rec.feature, &rec.target)?;
                if self.config.normalize_intrinsic {
                    self.normalizer.push(raw);
                    raw /= self.normalizer.std().max(1e-12);
                }
                if self.variant.uses_penalty() {
                    let (shaped, fired) = self.penalty.apply(raw);
                    raw = shaped;
                    record.penalty_count += fired as usize;
                }
                intrinsic = self.config.intrinsic_coef * raw;
                if self.variant.uses_feature_replay() {
                    self.features.push(rec.clone());
                }
                episode_features.push(rec);
            }
            if !intrinsic.is_finite() {
                return Err(Error::non_finite("intrinsic reward"));
            }
            let reward = step.reward + intrinsic;
            record.extrinsic_return += step.reward;
            record.intrinsic_sum += intrinsic;
            record.length += 1;
            record.actions.push(action);

            for seg in [&mut episode, &mut segment] {
                seg.states.extend_from_slice(&obs);
                seg.actions.push(action);
                seg.rewards.push(reward);
            }
            debug_assert_eq!(obs.len(), width);
            obs = step.observation;

            let rollout_full = self.config.rollout_len > 0 && segment.len() >= self.config.rollout_len;
            if !(step.done || rollout_full) {
                continue;
            }

            if step.done {
                record.terminal = step.info.terminal;
                self.flush_episode(&episode)?;
                episode.clear();
            }

            let bootstrap = if step.done { 0.0 } else { self.policy.evaluate(&obs)?.1 };
            let returns = bootstrapped_returns(&segment.rewards, bootstrap, self.config.gamma);
            let coefs = A2cCoefficients {
                value: self.config.value_coef,
                entropy: self.config.entropy_coef,
                max_grad_norm: self.config.clip(),
            };
            let loss = self.policy.a2c_update(&segment.states, &segment.actions, &returns, coefs)?;
            record.a2c_loss += loss.total;
            a2c_updates += 1;
            segment.clear();

            for _ in 0..self.config.sil_passes {
                if !self.sil.is_empty() {
                    let l = self.policy.sil_update(
                        &mut self.sil,
                        self.config.sil_batch,
                        self.config.sil_beta,
                        self.config.clip(),
                        &mut self.rng,
                    )?;
                    sil_active += l.active;
                    sil_sampled += l.sampled;
                }
                if let Some(rnd) = &mut self.rnd {
                    let source = if self.variant.uses_feature_replay() {
                        PredictorSource::Replay(&self.features)
                    } else {
                        PredictorSource::Online(&episode_features)
                    };
                    if let Some(l) = rnd.predictor_update(source, self.config.predictor_batch, &mut self.rng)? {
                        record.predictor_losses.push(l);
                    }
                }
            }

            if step.done {
                break;
            }
        }

        self.episodes += 1;
        record.a2c_loss /= a2c_updates.max(1) as f64;
        if sil_sampled > 0 {
            record.sil_updated_fraction = sil_active as f64 / sil_sampled as f64;
        }
        if !record.predictor_losses.is_empty() {
            record.predictor_loss =
                Some(record.predictor_losses.iter().sum::<f64>() / record.predictor_losses.len() as f64);
        }
        Ok(record)
    }

    /// Moves a finished episode into the self-imitation buffer with
    /// Monte-Carlo returns.
    fn flush_episode(&mut self, episode: &Segment) -> Result<()> {
        let n = episode.len();
        let returns = compute_returns(&episode.rewards, self.config.gamma);
        let values = self.policy.values(&episode.states, n)?;
        let width = self.policy.input_len();
        for (t, (&ret, v)) in returns.iter().zip(values).enumerate() {
            let state = episode.states[t * width..(t + 1) * width].to_vec();
            self.sil.push(Transition { state, action: episode.actions[t], ret }, ret - v)?;
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            version: CHECKPOINT_VERSION,
            variant: self.variant,
            config: self.config.clone(),
            policy: self.policy.clone(),
            rnd: self.rnd.clone(),
            sil: self.sil.clone(),
            features: self.features.clone(),
            penalty: self.penalty.clone(),
            normalizer: self.normalizer.clone(),
            rng: self.rng.clone(),
            episodes: self.episodes,
        }
    }

    pub fn from_checkpoint(c: AgentCheckpoint) -> Result<Self> {
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::format(format!("unsupported checkpoint version {}", c.version)));
        }
        c.config.validate()?;
        if c.rnd.is_some() != c.variant.uses_bonus() {
            return Err(Error::config(format!("checkpoint networks do not match variant {}", c.variant)));
        }
        Ok(Self {
            variant: c.variant,
            config: c.config,
            policy: c.policy,
            rnd: c.rnd,
            sil: c.sil,
            features: c.features,
            penalty: c.penalty,
            normalizer: c.normalizer,
            rng: c.rng,
            episodes: c.episodes,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = bincode::serialize(&self.checkpoint()).map_err(|e| Error::format(e.to_string()))?;
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let c: AgentCheckpoint =
            bincode::deserialize(&bytes).map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
        Self::from_checkpoint(c)
    }

    /// Disables the penalty guard while keeping every other setting.
    pub fn penalty_off(config: &AgentConfig) -> AgentConfig {
        AgentConfig {
            penalty: PenaltyConfig { guard: PenaltyGuard::Off, ..config.penalty.clone() },
            ..config.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::StepInfo;
    use crate::grid::{GridConfig, GridWorld, RewardMode};

    /// Three steps with rewards 0, 0, 30 regardless of the action.
    struct Scripted {
        t: usize,
    }

    impl Environment for Scripted {
        fn action_count(&self) -> usize {
            2
        }
        fn observation_len(&self) -> usize {
            2
        }
        fn feature_len(&self) -> usize {
            2
        }
        fn reset(&mut self) -> Vec<f64> {
            self.t = 0;
            vec![0.0, 1.0]
        }
        fn step(&mut self, _action: usize) -> Result<Step> {
            self.t += 1;
            let done = self.t == 3;
            Ok(Step {
                observation: vec![self.t as f64, 1.0],
                reward: if done { 30.0 } else { 0.0 },
                done,
                info: StepInfo { terminal: done.then_some(Terminal::Goal), ..StepInfo::default() },
            })
        }
        fn feature(&self) -> Vec<f64> {
            vec![self.t as f64, 0.0]
        }
    }

    fn small_config() -> AgentConfig {
        AgentConfig {
            policy_hidden: vec![16],
            rnd_hidden: vec![16],
            rnd_output: 8,
            sil_batch: 8,
            predictor_batch: 8,
            sil_capacity: 1000,
            feature_capacity: 1000,
            penalty: PenaltyConfig { window: 20, ..PenaltyConfig::default() },
            ..AgentConfig::default()
        }
    }

    fn grid() -> GridWorld {
        GridWorld::new(GridConfig {
            width: 8,
            height: 8,
            start: [4, 4],
            goal: Some([7, 7]),
            mode: RewardMode::Sparse,
            max_steps: 30,
            ..GridConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn sil_buffer_receives_hand_recursion_returns() {
        let mut env = Scripted { t: 0 };
        let mut agent = Agent::for_env(AgentVariant::Asil, small_config(), &env, 0).unwrap();
        let rec = agent.train_episode(&mut env).unwrap();
        assert_eq!(rec.length, 3);
        let sil = agent.sil_buffer();
        assert_eq!(sil.len(), 3);
        let rets: Vec<f64> = (0..3).map(|s| sil.get(s).ret).collect();
        assert!((rets[0] - 29.403).abs() < 1e-12);
        assert!((rets[1] - 29.7).abs() < 1e-12);
        assert_eq!(rets[2], 30.0);
        assert_eq!(sil.get(1).state, vec![1.0, 1.0]);
    }

    #[test]
    fn asil_has_no_bonus_and_no_predictor() {
        let mut env = grid();
        let mut agent = Agent::for_env(AgentVariant::Asil, small_config(), &env, 1).unwrap();
        for _ in 0..3 {
            let rec = agent.train_episode(&mut env).unwrap();
            assert_eq!(rec.intrinsic_sum, 0.0);
            assert!(rec.predictor_losses.is_empty());
        }
        assert!(agent.rnd().is_none());
    }

    #[test]
    fn aie3_feature_buffer_grows_by_episode_length() {
        let mut env = grid();
        let mut agent = Agent::for_env(AgentVariant::Aie3, small_config(), &env, 2).unwrap();
        let mut total = 0;
        for _ in 0..4 {
            total += agent.train_episode(&mut env).unwrap().length;
            assert_eq!(agent.feature_buffer().len(), total);
        }
    }

    #[test]
    fn aie2_without_guard_matches_aie1() {
        let cfg = Agent::penalty_off(&small_config());
        let mut e1 = grid();
        let mut e2 = grid();
        let mut a1 = Agent::for_env(AgentVariant::Aie1, cfg.clone(), &e1, 3).unwrap();
        let mut a2 = Agent::for_env(AgentVariant::Aie2, cfg, &e2, 3).unwrap();
        for _ in 0..10 {
            assert_eq!(a1.train_episode(&mut e1).unwrap(), a2.train_episode(&mut e2).unwrap());
        }
    }

    #[test]
    fn aie3_with_per_episode_memory_matches_aie2_losses() {
        let cfg = AgentConfig { clear_feature_buffer_each_episode: true, ..small_config() };
        let mut e2 = grid();
        let mut e3 = grid();
        let mut a2 = Agent::for_env(AgentVariant::Aie2, cfg.clone(), &e2, 4).unwrap();
        let mut a3 = Agent::for_env(AgentVariant::Aie3, cfg, &e3, 4).unwrap();
        for _ in 0..10 {
            let r2 = a2.train_episode(&mut e2).unwrap();
            let r3 = a3.train_episode(&mut e3).unwrap();
            assert!(!r2.predictor_losses.is_empty());
            assert_eq!(r2.predictor_losses, r3.predictor_losses);
        }
    }

    #[test]
    fn checkpoint_resumes_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.bin");
        let mut env = grid();
        let mut agent = Agent::for_env(AgentVariant::Aie3, small_config(), &env, 5).unwrap();
        for _ in 0..3 {
            agent.train_episode(&mut env).unwrap();
        }
        agent.save(&path).unwrap();
        let mut resumed = Agent::load(&path).unwrap();
        assert_eq!(resumed, agent);
        for _ in 0..3 {
            let a = agent.train_episode(&mut env).unwrap();
            let b = resumed.train_episode(&mut env).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mismatched_env_is_a_config_error() {
        let env = grid();
        let mut agent = Agent::new(AgentVariant::Aie1, small_config(), 7, env.feature_len(), 4, 0).unwrap();
        let mut env = env;
        assert!(agent.train_episode(&mut env).unwrap_err().is_config());
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in AgentVariant::ALL {
            assert_eq!(AgentVariant::parse(v.as_str()).unwrap(), v);
        }
        assert!(AgentVariant::parse("aie4").is_err());
    }
}

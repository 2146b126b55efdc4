//! Actor-critic agents with self-imitation, exploration bonus, intrinsic
//! penalty and predictor replay, composable into four variants.

mod buffers;
mod penalty;
mod policy;
mod returns;
mod rnd;
mod sumtree;
mod trainer;

pub use buffers::{sample_uniform, FeatureBuffer, FeatureRecord, SilBuffer, Transition};
pub use penalty::{PenaltyConfig, PenaltyGuard, PenaltyTracker};
pub use policy::{A2cCoefficients, A2cLoss, A2cObjective, PolicyValueNet, SilLoss, SilObjective};
pub use returns::{bootstrapped_returns, compute_returns};
pub use rnd::{PredictorSource, RndPair};
pub use sumtree::SumTree;
pub use trainer::{Agent, AgentCheckpoint, AgentConfig, AgentVariant, EpisodeRecord, RunningStat};

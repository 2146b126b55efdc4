//! Exploration-focused actor-critic agents (A2C with self-imitation learning
//! and random network distillation) together with the two testbeds they are
//! evaluated on: a sparse-reward grid world and a 3-DOF UCAV mission
//! simulator with proportional-navigation missiles.

pub mod agents;
pub mod encoding;
pub mod env;
pub mod grid;
pub mod harness;
pub mod ucav;
pub mod error;
pub mod nn;

pub use error::{Error, Result};

//! Tabular reinforcement learning on small finite MDPs: environment
//! samplers, prioritized sweeping and episodic-control agents with
//! model-free baselines, exact solvers, and an experiment harness.

pub mod agents;
pub mod envgen;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod oracle;
pub mod rng;
pub mod verify;

pub use agents::{Agent, AgentConfig, Algorithm, QTable};
pub use envgen::{EnvSpec, MazeSpec, RewardMode, TmdpSpec};
pub use error::{Error, Result};
pub use mdp::{Action, State, TabularMdp, Transition};
pub use rng::RngStream;

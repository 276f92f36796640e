//! Samplers for the benchmark environment families.

mod maze;
mod tmdp;

pub use maze::{gen_maze, Maze, MazeLayout, MazeSpec, DOWN, LEFT, RIGHT, UP};
pub use tmdp::{gen_det_tmdp, gen_stoch_tmdp, gen_tmdp, RewardMode, TmdpSpec};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mdp::TabularMdp;
use crate::rng::RngStream;

/// An environment family together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EnvSpec {
    Tmdp(TmdpSpec),
    Maze(MazeSpec),
}

/// A sampled environment.
#[derive(Clone, Debug)]
pub struct Instance {
    pub mdp: TabularMdp,
    /// Tree depth for tree MDPs.
    pub depth: Option<usize>,
    pub layout: Option<MazeLayout>,
}

impl EnvSpec {
    pub fn sample(&self, rng: &mut RngStream) -> Result<Instance> {
        match self {
            EnvSpec::Tmdp(spec) => Ok(Instance { mdp: gen_tmdp(spec, rng)?, depth: Some(spec.depth), layout: None }),
            EnvSpec::Maze(spec) => {
                let maze = gen_maze(spec, rng)?;
                Ok(Instance { mdp: maze.mdp, depth: None, layout: Some(maze.layout) })
            }
        }
    }

    pub fn is_deterministic_tree(&self) -> bool {
        matches!(self, EnvSpec::Tmdp(t) if t.branching == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_spec_toml_round_trip() {
        let spec = EnvSpec::Tmdp(TmdpSpec::stochastic(4, 4, 2, RewardMode::Intermittent));
        let text = toml::to_string(&spec).unwrap();
        assert!(text.contains("family = \"tmdp\""));
        let back: EnvSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn env_spec_rejects_unknown_keys() {
        let text = "family = \"maze\"\nwidth = 3\nheight = 3\nwall_density = 0.1\ncolour = 2\n";
        assert!(toml::from_str::<EnvSpec>(text).is_err());
        let ok = "family = \"maze\"\nwidth = 3\nheight = 3\nwall_density = 0.1\n";
        assert!(toml::from_str::<EnvSpec>(ok).is_ok());
    }
}

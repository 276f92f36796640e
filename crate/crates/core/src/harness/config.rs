use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, Algorithm, ResetQueue};
use crate::envgen::{EnvSpec, MazeSpec, RewardMode, TmdpSpec};
use crate::error::{Error, Result};

/// Everything needed to reproduce one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub gamma: f64,
    pub epsilon: f64,
    /// Window length `T` in steps.
    pub window: usize,
    /// Sampled environments `N`.
    pub env_samples: usize,
    /// Runs per environment and algorithm `M`.
    pub runs_per_env: usize,
    pub steps_per_run: usize,
    /// Episodes longer than this are cut and restarted without reward.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode_cap: Option<usize>,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub env: EnvSpec,
    pub agents: Vec<AgentConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.window == 0 || self.env_samples == 0 || self.runs_per_env == 0 {
            return bad("window, env_samples and runs_per_env must be at least 1".into());
        }
        if self.steps_per_run == 0 || !self.steps_per_run.is_multiple_of(self.window) {
            return bad(format!(
                "steps_per_run = {} must be a positive multiple of window = {}",
                self.steps_per_run, self.window
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma = {} outside [0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon = {} outside [0, 1]", self.epsilon));
        }
        if self.episode_cap == Some(0) {
            return bad("episode_cap must be at least 1".into());
        }
        match &self.env {
            EnvSpec::Tmdp(spec) => spec.check()?,
            EnvSpec::Maze(spec) => spec.check()?,
        }
        let mut seen = HashSet::new();
        for agent in &self.agents {
            let valid_id =
                !agent.id.is_empty() && agent.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !valid_id {
                return bad(format!("agent id `{}` must be non-empty [A-Za-z0-9_-]", agent.id));
            }
            if !seen.insert(agent.id.as_str()) {
                return bad(format!("duplicate agent id `{}`", agent.id));
            }
            agent.check()?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn agent(&self, id: &str) -> Option<&AgentConfig> {
        self.agents.iter().find(|a| a.id == id)
    }
}

pub const PRESETS: [&str; 4] = ["fig1a", "fig1b", "fig2b", "fig3b"];

/// Hyperparameters that differ between the benchmark families.
struct Table {
    nstep: (f64, usize),
    qlambda: (f64, f64),
    qlearning: f64,
    q0_q: f64,
    q0_ps: f64,
}

fn roster(t: &Table) -> Vec<AgentConfig> {
    use Algorithm::*;
    vec![
        AgentConfig::new("ec", EpisodicControl),
        AgentConfig::new("ps", PrioritizedSweeping).backups(3),
        AgentConfig::new("ps_reset", PrioritizedSweepingReset),
        AgentConfig::new("q_learning", QLearning).alpha(t.qlearning),
        AgentConfig::new("q_lambda", QLambda).alpha(t.qlambda.0).lambda(t.qlambda.1),
        AgentConfig::new("nstep_td", NStepTd).alpha(t.nstep.0).n(t.nstep.1),
        AgentConfig::new("mc", MonteCarlo).alpha(t.nstep.0),
        AgentConfig::new("q_learning_optimistic", QLearning).alpha(t.qlearning).q0(t.q0_q),
        AgentConfig::new("ps_optimistic", PrioritizedSweeping).backups(3).q0(t.q0_ps),
    ]
}

/// Named benchmark configurations.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let det_tree = |rewards| ExperimentConfig {
        name: String::new(),
        gamma: 1.0,
        epsilon: 0.1,
        window: 200,
        env_samples: 100,
        runs_per_env: 8,
        steps_per_run: 6000,
        episode_cap: None,
        seed: 1,
        output_dir: default_output_dir(),
        env: EnvSpec::Tmdp(TmdpSpec::deterministic(4, 5, rewards)),
        agents: roster(&Table { nstep: (0.08, 5), qlambda: (1.0, 0.2), qlearning: 1.0, q0_q: 5.0, q0_ps: 5.0 }),
    };
    let mut cfg = match name {
        "fig1a" => det_tree(RewardMode::TerminalOnly),
        "fig1b" => det_tree(RewardMode::Intermittent),
        "fig2b" => ExperimentConfig {
            window: 100,
            env_samples: 100,
            runs_per_env: 50,
            steps_per_run: 3000,
            env: EnvSpec::Tmdp(TmdpSpec::stochastic(4, 4, 2, RewardMode::TerminalOnly)),
            agents: roster(&Table { nstep: (0.05, 5), qlambda: (0.1, 0.2), qlearning: 0.1, q0_q: 5.0, q0_ps: 5.0 }),
            ..det_tree(RewardMode::Intermittent)
        },
        "fig3b" => {
            let mut agents =
                roster(&Table { nstep: (0.01, 25), qlambda: (0.005, 0.2), qlearning: 1.0, q0_q: 5.0, q0_ps: 0.005 });
            agents[2].reset_queue = Some(ResetQueue::Visited);
            ExperimentConfig {
                gamma: 0.99,
                window: 10_000,
                env_samples: 50,
                runs_per_env: 8,
                steps_per_run: 300_000,
                episode_cap: Some(10_000),
                env: EnvSpec::Maze(MazeSpec::default()),
                agents,
                ..det_tree(RewardMode::TerminalOnly)
            }
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    cfg.name = name.to_string();
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.agents.len(), 9);
            let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, back);
        }
        assert!(matches!(preset("fig9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn table_values() {
        let f1 = preset("fig1a").unwrap();
        let n = f1.agent("nstep_td").unwrap();
        assert_eq!((n.alpha, n.n), (Some(0.08), Some(5)));
        let f2 = preset("fig2b").unwrap();
        let ql = f2.agent("q_lambda").unwrap();
        assert_eq!((ql.alpha, ql.lambda), (Some(0.1), Some(0.2)));
        let f3 = preset("fig3b").unwrap();
        assert_eq!(f3.agent("q_learning").unwrap().alpha, Some(1.0));
        assert_eq!(f3.agent("q_learning_optimistic").unwrap().q0, 5.0);
        assert_eq!(f3.agent("ps_optimistic").unwrap().q0, 0.005);
        assert_eq!(f3.agent("ps_reset").unwrap().reset_queue, Some(ResetQueue::Visited));
        assert_eq!(f1.agent("ps_reset").unwrap().reset_queue, None);
        assert_eq!(f2.env, EnvSpec::Tmdp(TmdpSpec::stochastic(4, 4, 2, RewardMode::TerminalOnly)));
        let f1b = preset("fig1b").unwrap();
        assert_eq!(f1b.agents, f1.agents);
        assert_eq!(f1b.env, EnvSpec::Tmdp(TmdpSpec::deterministic(4, 5, RewardMode::Intermittent)));
    }

    #[test]
    fn validation_failures() {
        let mut cfg = preset("fig1a").unwrap();
        cfg.steps_per_run = 6100;
        assert!(cfg.validate().is_err());
        let mut cfg = preset("fig1a").unwrap();
        cfg.agents[1].id = "ec".into();
        assert!(cfg.validate().is_err());
        let mut cfg = preset("fig1a").unwrap();
        cfg.window = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = preset("fig1a").unwrap().to_toml();
        assert!(ExperimentConfig::from_toml(&format!("temperature = 3\n{text}")).is_err());
    }
}

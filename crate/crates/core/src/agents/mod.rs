//! Learning agents behind one contract.
//!
//! The harness drives every agent the same way: [`Agent::select`] an action,
//! [`Agent::observe`] the resulting transition, [`Agent::plan`] once per step
//! and [`Agent::end_episode`] when the episode stops.

mod episodic;
mod model;
mod model_free;
mod policy;
mod qtable;
mod queue;
mod sweeping;

pub use episodic::{ec_update, EpisodicControl};
pub use model::{EmpiricalModel, ModelMode};
pub use model_free::{
    mc_update, nstep_td_update, q_lambda_update, q_learning_update, EligibilityTrace, MonteCarlo, NStepTd, QLambda,
    QLearning,
};
pub use policy::{select_action, EpsilonMode, Explorer, Selection};
pub use qtable::QTable;
pub use queue::MaxPriorityQueue;
pub use sweeping::{PrioritizedSweeping, ResetQueue, Sweeper, SweepingWithReset};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Action, State, Transition};
use crate::rng::RngStream;

pub trait Agent: Send {
    fn start_episode(&mut self, _s: State) {}

    fn select(&mut self, s: State, rng: &mut RngStream) -> Action;

    fn observe(&mut self, t: &Transition);

    /// Background planning after a step.
    fn plan(&mut self) {}

    fn end_episode(&mut self) {}

    fn q(&self) -> &QTable;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    EpisodicControl,
    PrioritizedSweeping,
    PrioritizedSweepingReset,
    QLearning,
    QLambda,
    NStepTd,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Counting,
    Leaky,
    Deterministic,
}

/// One entry of an agent roster. Hyperparameters an algorithm does not
/// use must be left unset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub id: String,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub q0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backups_per_step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Defaults to on for episodic control and both sweeping variants when
    /// `q0 ≤ 0`, off otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefer_novel: Option<bool>,
    #[serde(default, skip_serializing_if = "is_default_mode")]
    pub epsilon_mode: EpsilonMode,
    /// Sweeping with reset only; defaults to the last state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reset_queue: Option<ResetQueue>,
}

fn is_default_mode(m: &EpsilonMode) -> bool {
    *m == EpsilonMode::NonGreedy
}

impl AgentConfig {
    pub fn new(id: impl Into<String>, algorithm: Algorithm) -> Self {
        AgentConfig {
            id: id.into(),
            algorithm,
            alpha: None,
            n: None,
            lambda: None,
            q0: 0.0,
            backups_per_step: None,
            model: None,
            kappa: None,
            prefer_novel: None,
            epsilon_mode: EpsilonMode::NonGreedy,
            reset_queue: None,
        }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn q0(mut self, q0: f64) -> Self {
        self.q0 = q0;
        self
    }

    pub fn backups(mut self, backups: usize) -> Self {
        self.backups_per_step = Some(backups);
        self
    }

    pub fn reset_queue(mut self, queue: ResetQueue) -> Self {
        self.reset_queue = Some(queue);
        self
    }

    pub fn prefer_novel(mut self, on: bool) -> Self {
        self.prefer_novel = Some(on);
        self
    }

    pub fn novelty_enabled(&self) -> bool {
        let low_init = matches!(
            self.algorithm,
            Algorithm::EpisodicControl | Algorithm::PrioritizedSweeping | Algorithm::PrioritizedSweepingReset
        ) && self.q0 <= 0.0;
        self.prefer_novel.unwrap_or(low_init)
    }

    fn model_mode(&self) -> Result<ModelMode> {
        Ok(match (self.model.unwrap_or_default(), self.kappa) {
            (ModelKind::Counting, None) => ModelMode::Counting,
            (ModelKind::Deterministic, None) => ModelMode::Deterministic,
            (ModelKind::Leaky, Some(kappa)) if kappa > 0.0 && kappa < 1.0 => ModelMode::Leaky { kappa },
            (ModelKind::Leaky, _) => return Err(self.bad("leaky model needs kappa in (0, 1)")),
            (_, Some(_)) => return Err(self.bad("kappa only applies to the leaky model")),
        })
    }

    fn bad(&self, msg: &str) -> Error {
        Error::Config(format!("agent `{}`: {msg}", self.id))
    }

    /// Checks that exactly the hyperparameters the algorithm uses are set.
    pub fn check(&self) -> Result<()> {
        use Algorithm::*;
        let needs_alpha = matches!(self.algorithm, QLearning | QLambda | NStepTd | MonteCarlo);
        let sweeping = matches!(self.algorithm, PrioritizedSweeping | PrioritizedSweepingReset);
        let pairs = [
            ("alpha", self.alpha.is_some(), needs_alpha),
            ("n", self.n.is_some(), self.algorithm == NStepTd),
            ("lambda", self.lambda.is_some(), self.algorithm == QLambda),
            ("backups_per_step", self.backups_per_step.is_some(), self.algorithm == PrioritizedSweeping),
        ];
        for (name, present, needed) in pairs {
            if present != needed {
                let what = if needed { "requires" } else { "does not use" };
                return Err(self.bad(&format!("{:?} {what} `{name}`", self.algorithm)));
            }
        }
        if self.reset_queue.is_some() && self.algorithm != PrioritizedSweepingReset {
            return Err(self.bad("only sweeping with reset takes `reset_queue`"));
        }
        if !sweeping && (self.model.is_some() || self.kappa.is_some()) {
            return Err(self.bad("only sweeping agents take a model"));
        }
        if sweeping {
            self.model_mode()?;
        }
        if matches!(self.alpha, Some(a) if !(0.0..=1.0).contains(&a)) {
            return Err(self.bad("alpha must lie in [0, 1]"));
        }
        if matches!(self.lambda, Some(l) if !(0.0..=1.0).contains(&l)) {
            return Err(self.bad("lambda must lie in [0, 1]"));
        }
        if self.n == Some(0) {
            return Err(self.bad("n must be at least 1"));
        }
        if !self.q0.is_finite() {
            return Err(self.bad("q0 must be finite"));
        }
        Ok(())
    }

    pub fn build(&self, num_states: usize, num_actions: usize, gamma: f64, epsilon: f64) -> Result<Box<dyn Agent>> {
        self.check()?;
        let explorer = Explorer::new(num_states, num_actions, epsilon, self.epsilon_mode, self.novelty_enabled());
        let q = QTable::new(num_states, num_actions, self.q0);
        let alpha = self.alpha.unwrap_or_default();
        Ok(match self.algorithm {
            Algorithm::EpisodicControl => Box::new(EpisodicControl::new(q, explorer, gamma)),
            Algorithm::PrioritizedSweeping => Box::new(PrioritizedSweeping::new(
                Sweeper::new(num_states, num_actions, gamma, self.q0, self.model_mode()?),
                explorer,
                self.backups_per_step.unwrap_or_default(),
            )),
            Algorithm::PrioritizedSweepingReset => Box::new(SweepingWithReset::with_queue(
                Sweeper::new(num_states, num_actions, gamma, self.q0, self.model_mode()?),
                explorer,
                self.reset_queue.unwrap_or_default(),
            )),
            Algorithm::QLearning => Box::new(QLearning::new(q, explorer, alpha, gamma)),
            Algorithm::QLambda => Box::new(QLambda::new(q, explorer, alpha, self.lambda.unwrap_or_default(), gamma)),
            Algorithm::NStepTd => Box::new(NStepTd::new(q, explorer, alpha, self.n.unwrap_or(1), gamma)),
            Algorithm::MonteCarlo => Box::new(MonteCarlo::new(q, explorer, alpha, gamma)),
        })
    }
}

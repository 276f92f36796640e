//! Executable checks: episodic control against sweeping with model reset on
//! deterministic trees, and full-drain sweeping against value iteration on
//! the learned model.

use std::fmt;

use rayon::prelude::*;

use crate::agents::{Agent, EpisodicControl, EpsilonMode, Explorer, ModelMode, QTable, Sweeper, SweepingWithReset};
use crate::envgen::{gen_det_tmdp, gen_maze, gen_tmdp, MazeSpec, RewardMode, TmdpSpec};
use crate::error::{Error, Result};
use crate::mdp::{Action, State, TabularMdp, Transition};
use crate::oracle::{value_iteration, EmpiricalSnapshot};
use crate::rng::RngStream;

/// First pair on which the two agents disagreed.
#[derive(Clone, Debug, PartialEq)]
pub struct Divergence {
    pub instance: usize,
    pub trace: usize,
    pub episode: usize,
    pub state: State,
    pub action: Action,
    pub ec: f64,
    pub ps: f64,
    /// Actions of every episode up to and including the failing one.
    pub actions: Vec<Vec<Action>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub instances: usize,
    pub traces_per_instance: usize,
    pub episodes: usize,
    pub max_abs_q_diff: f64,
    pub exact_equal: bool,
    pub first_divergence: Option<Divergence>,
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite: equivalence")?;
        writeln!(f, "instances: {}", self.instances)?;
        writeln!(f, "traces_per_instance: {}", self.traces_per_instance)?;
        writeln!(f, "episodes: {}", self.episodes)?;
        writeln!(f, "max_abs_q_diff: {:e}", self.max_abs_q_diff)?;
        writeln!(f, "exact_equal: {}", self.exact_equal)?;
        match &self.first_divergence {
            None => writeln!(f, "first_divergence: none"),
            Some(d) => {
                writeln!(
                    f,
                    "first_divergence: instance={} trace={} episode={} state={} action={} ec={:?} ps={:?}",
                    d.instance, d.trace, d.episode, d.state, d.action, d.ec, d.ps
                )?;
                for (i, ep) in d.actions.iter().enumerate() {
                    writeln!(f, "  episode {i}: {ep:?}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct EquivalenceConfig {
    pub actions: usize,
    pub depth: usize,
    /// Rewards are multiples of `2^-bits`; `None` leaves them unquantized.
    pub quantum_bits: Option<u32>,
    pub instances: usize,
    pub traces: usize,
    pub episodes: usize,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        EquivalenceConfig { actions: 4, depth: 5, quantum_bits: Some(10), instances: 100, traces: 10, episodes: 50 }
    }
}

struct TraceOutcome {
    max_diff: f64,
    divergence: Option<Divergence>,
}

fn zero_init_pair(ns: usize, na: usize) -> (EpisodicControl, SweepingWithReset) {
    let idle = || Explorer::new(ns, na, 0.0, EpsilonMode::NonGreedy, false);
    let ec = EpisodicControl::new(QTable::new(ns, na, 0.0), idle(), 1.0);
    let ps = SweepingWithReset::new(Sweeper::new(ns, na, 1.0, 0.0, ModelMode::Counting), idle());
    (ec, ps)
}

/// Runs one uniform-random action trace through both agents and compares
/// their tables after every episode.
fn lockstep_trace(
    mdp: &TabularMdp,
    episodes: usize,
    (instance, trace): (usize, usize),
    mut rng: RngStream,
) -> TraceOutcome {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let (mut ec, mut ps) = zero_init_pair(ns, na);
    let mut actions: Vec<Vec<Action>> = Vec::new();
    let mut max_diff = 0.0_f64;
    for episode in 0..episodes {
        let mut s = mdp.reset(&mut rng);
        let mut taken = Vec::new();
        loop {
            let a = rng.below(na);
            taken.push(a);
            let t = mdp.step(s, a, &mut rng);
            ec.observe(&t);
            ps.observe(&t);
            if t.terminal {
                break;
            }
            s = t.next_state;
        }
        ec.end_episode();
        ps.end_episode();
        actions.push(taken);
        let mut divergence = None;
        for s in 0..ns {
            for a in 0..na {
                let (x, y) = (ec.q.get(s, a), ps.sweeper.q.get(s, a));
                if x.to_bits() != y.to_bits() {
                    max_diff = max_diff.max((x - y).abs());
                    divergence.get_or_insert(Divergence {
                        instance,
                        trace,
                        episode,
                        state: s,
                        action: a,
                        ec: x,
                        ps: y,
                        actions: actions.clone(),
                    });
                }
            }
        }
        if divergence.is_some() {
            return TraceOutcome { max_diff, divergence };
        }
    }
    TraceOutcome { max_diff, divergence: None }
}

/// Lockstep comparison of episodic control and sweeping with model reset
/// over random deterministic trees with strictly positive rewards.
///
/// Stream layout: instance `i` takes `rng.child(i)`; its tree is drawn from
/// that stream's child 0 and trace `j` from child `j + 1`.
pub fn lockstep_equivalence(cfg: &EquivalenceConfig, rng: &mut RngStream) -> Result<EquivalenceReport> {
    let mut spec = TmdpSpec::deterministic(cfg.actions, cfg.depth, RewardMode::Intermittent);
    spec.quantum_bits = cfg.quantum_bits;
    spec.check()?;
    let mut jobs = Vec::with_capacity(cfg.instances * cfg.traces);
    let mut trees = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances {
        let mut inst = rng.child(i as u64);
        trees.push(gen_det_tmdp(&spec, &mut inst.child(0))?);
        for j in 0..cfg.traces {
            jobs.push((i, j, inst.child(j as u64 + 1)));
        }
    }
    let outcomes: Vec<TraceOutcome> =
        jobs.into_par_iter().map(|(i, j, stream)| lockstep_trace(&trees[i], cfg.episodes, (i, j), stream)).collect();
    let max_abs_q_diff = outcomes.iter().map(|o| o.max_diff).fold(0.0, f64::max);
    let first_divergence = outcomes.into_iter().find_map(|o| o.divergence);
    Ok(EquivalenceReport {
        instances: cfg.instances,
        traces_per_instance: cfg.traces,
        episodes: cfg.episodes,
        max_abs_q_diff,
        exact_equal: first_divergence.is_none(),
        first_divergence,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrainOutcome {
    /// Largest sup-norm gap between drained sweeping and value iteration.
    pub max_gap: f64,
    pub steps: usize,
    pub backups: usize,
}

/// Upper bound on backups per step; a drain that needs more is reported as
/// an infinite gap.
const DRAIN_CAP: usize = 50_000_000;

/// Online sweeping with an unlimited planning budget under a uniform-random
/// behaviour policy. After every step the table is compared to value
/// iteration on the current learned model.
pub fn drain_consistency(mdp: &TabularMdp, gamma: f64, steps: usize, rng: &mut RngStream) -> Result<DrainOutcome> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut sweeper = Sweeper::new(ns, na, gamma, 0.0, ModelMode::Counting);
    let mut reference = QTable::new(ns, na, 0.0);
    let mut outcome = DrainOutcome { max_gap: 0.0, steps, backups: 0 };
    let mut s = mdp.reset(rng);
    for _ in 0..steps {
        let t: Transition = mdp.step(s, rng.below(na), rng);
        sweeper.observe(&t, true);
        outcome.backups += sweeper.plan(DRAIN_CAP);
        if !sweeper.queue.is_empty() {
            outcome.max_gap = f64::INFINITY;
            return Ok(outcome);
        }
        let snapshot = EmpiricalSnapshot { model: &sweeper.model, terminal: sweeper.terminal_flags() };
        reference = value_iteration(&snapshot, gamma, 1e-11, reference)?.0;
        outcome.max_gap = outcome.max_gap.max(sweeper.q.max_abs_diff(&reference));
        s = if t.terminal { mdp.reset(rng) } else { t.next_state };
    }
    Ok(outcome)
}

/// One benchmark-style instance for the drain suite.
#[derive(Clone, Debug)]
pub struct DrainInstance {
    pub label: &'static str,
    pub mdp: TabularMdp,
    pub gamma: f64,
}

/// Cycles through deterministic trees, stochastic trees and small mazes.
pub fn drain_instance(index: usize, rng: &mut RngStream) -> Result<DrainInstance> {
    Ok(match index % 3 {
        0 => DrainInstance {
            label: "det_tmdp",
            mdp: gen_tmdp(&TmdpSpec::deterministic(3, 4, RewardMode::Intermittent), rng)?,
            gamma: 1.0,
        },
        1 => DrainInstance {
            label: "stoch_tmdp",
            mdp: gen_tmdp(&TmdpSpec::stochastic(3, 4, 3, RewardMode::Intermittent), rng)?,
            gamma: 1.0,
        },
        _ => {
            let spec = MazeSpec { width: 8, height: 8, wall_density: 0.3, goal: None };
            DrainInstance { label: "maze", mdp: gen_maze(&spec, rng)?.mdp, gamma: 0.99 }
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrainCase {
    pub label: &'static str,
    pub outcome: DrainOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrainReport {
    pub tolerance: f64,
    pub cases: Vec<DrainCase>,
}

impl DrainReport {
    pub fn max_gap(&self) -> f64 {
        self.cases.iter().map(|c| c.outcome.max_gap).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_gap() <= self.tolerance
    }
}

impl fmt::Display for DrainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite: drain")?;
        writeln!(f, "instances: {}", self.cases.len())?;
        for (i, c) in self.cases.iter().enumerate() {
            writeln!(
                f,
                "  {i:>3} {:<10} steps={} backups={} gap={:e}",
                c.label, c.outcome.steps, c.outcome.backups, c.outcome.max_gap
            )?;
        }
        writeln!(f, "max_gap: {:e}", self.max_gap())?;
        writeln!(f, "tolerance: {:e}", self.tolerance)?;
        writeln!(f, "passed: {}", self.passed())
    }
}

/// Instance `i` takes `rng.child(i)`: its child 0 draws the environment and
/// child 1 drives the behaviour policy.
pub fn drain_suite(instances: usize, steps: usize, rng: &mut RngStream) -> Result<DrainReport> {
    let jobs: Vec<(usize, RngStream)> = (0..instances).map(|i| (i, rng.child(i as u64))).collect();
    let cases = jobs
        .into_par_iter()
        .map(|(i, mut stream)| {
            let inst = drain_instance(i, &mut stream.child(0))?;
            let outcome = drain_consistency(&inst.mdp, inst.gamma, steps, &mut stream.child(1))?;
            Ok(DrainCase { label: inst.label, outcome })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DrainReport { tolerance: 1e-8, cases })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EcBoundTrial {
    pub ec_frozen: bool,
    pub ps_changed: bool,
    /// First episode after which some `max_a Q` of the sweeping agent fell
    /// below the initial value.
    pub ps_decrease_episode: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EcBoundReport {
    pub q0: f64,
    pub episodes: usize,
    pub trials: Vec<EcBoundTrial>,
}

impl EcBoundReport {
    /// Every trial keeps episodic control frozen and moves the sweeping
    /// table, and at least one trial shows a value dropping below `q0`.
    pub fn passed(&self) -> bool {
        self.trials.iter().all(|t| t.ec_frozen && t.ps_changed)
            && self.trials.iter().any(|t| t.ps_decrease_episode.is_some())
    }
}

impl fmt::Display for EcBoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let count = |p: fn(&EcBoundTrial) -> bool| self.trials.iter().filter(|t| p(t)).count();
        writeln!(f, "suite: ec-bound")?;
        writeln!(f, "q0: {}", self.q0)?;
        writeln!(f, "trials: {}", self.trials.len())?;
        writeln!(f, "episodes: {}", self.episodes)?;
        writeln!(f, "ec_frozen: {}/{}", count(|t| t.ec_frozen), self.trials.len())?;
        writeln!(f, "ps_changed: {}/{}", count(|t| t.ps_changed), self.trials.len())?;
        writeln!(f, "ps_decreased: {}/{}", count(|t| t.ps_decrease_episode.is_some()), self.trials.len())?;
        let first = self.trials.iter().filter_map(|t| t.ps_decrease_episode).min();
        match first {
            Some(e) => writeln!(f, "earliest_decrease_episode: {e}")?,
            None => writeln!(f, "earliest_decrease_episode: none")?,
        }
        writeln!(f, "passed: {}", self.passed())
    }
}

/// Optimistic initialization breaks the equivalence: episodic control never
/// moves off `q0` while sweeping with model reset does.
///
/// Trial `i` takes `rng.child(i)`; child 0 draws the tree, child 1 the trace.
pub fn ec_bound_check(
    spec: &TmdpSpec,
    q0: f64,
    episodes: usize,
    trials: usize,
    rng: &mut RngStream,
) -> Result<EcBoundReport> {
    spec.check()?;
    if spec.branching != 1 {
        return Err(Error::Precondition("ec-bound needs a deterministic tree".into()));
    }
    let bound = spec.depth as f64;
    if q0 < bound {
        return Err(Error::Precondition(format!("optimistic start q0 = {q0} is below depth × max reward = {bound}")));
    }
    let jobs: Vec<RngStream> = (0..trials).map(|i| rng.child(i as u64)).collect();
    let trials = jobs
        .into_par_iter()
        .map(|mut stream| {
            let mdp = gen_det_tmdp(spec, &mut stream.child(0))?;
            Ok(ec_bound_trial(&mdp, q0, episodes, &mut stream.child(1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EcBoundReport { q0, episodes, trials })
}

fn ec_bound_trial(mdp: &TabularMdp, q0: f64, episodes: usize, rng: &mut RngStream) -> EcBoundTrial {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let idle = || Explorer::new(ns, na, 0.0, EpsilonMode::NonGreedy, false);
    let mut ec = EpisodicControl::new(QTable::new(ns, na, q0), idle(), 1.0);
    let mut ps = SweepingWithReset::new(Sweeper::new(ns, na, 1.0, q0, ModelMode::Counting), idle());
    let mut trial = EcBoundTrial { ec_frozen: true, ps_changed: false, ps_decrease_episode: None };
    for episode in 0..episodes {
        let mut s = mdp.reset(rng);
        loop {
            let t = mdp.step(s, rng.below(na), rng);
            ec.observe(&t);
            ps.observe(&t);
            if t.terminal {
                break;
            }
            s = t.next_state;
        }
        ec.end_episode();
        ps.end_episode();
        let q = &ps.sweeper.q;
        trial.ec_frozen &= ec.q.as_slice().iter().all(|&x| x == q0);
        trial.ps_changed |= q.as_slice().iter().any(|&x| x != q0);
        if trial.ps_decrease_episode.is_none() && (0..ns).any(|s| !mdp.is_terminal(s) && q.max(s) < q0) {
            trial.ps_decrease_episode = Some(episode);
        }
    }
    trial
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_equivalence_suite_is_exact() {
        let cfg = EquivalenceConfig { instances: 5, traces: 3, episodes: 30, ..Default::default() };
        let report = lockstep_equivalence(&cfg, &mut RngStream::new(1)).unwrap();
        assert!(report.exact_equal, "{report}");
        assert_eq!(report.max_abs_q_diff, 0.0);
    }

    #[test]
    fn zero_episodes_are_trivially_equal() {
        let cfg = EquivalenceConfig { instances: 2, traces: 2, episodes: 0, ..Default::default() };
        let report = lockstep_equivalence(&cfg, &mut RngStream::new(2)).unwrap();
        assert!(report.exact_equal);
    }

    #[test]
    fn first_episode_values_are_returns() {
        let spec = TmdpSpec::deterministic(3, 4, RewardMode::Intermittent).quantized(10);
        let mut rng = RngStream::new(5);
        let mdp = gen_det_tmdp(&spec, &mut rng).unwrap();
        let (mut ec, mut ps) = zero_init_pair(mdp.num_states(), 3);
        let mut path = Vec::new();
        let mut s = 0;
        loop {
            let t = mdp.step(s, rng.below(3), &mut rng);
            ec.observe(&t);
            ps.observe(&t);
            path.push(t);
            if t.terminal {
                break;
            }
            s = t.next_state;
        }
        ec.end_episode();
        ps.end_episode();
        for (i, t) in path.iter().enumerate() {
            let g: f64 = path[i..].iter().map(|u| u.reward).sum();
            assert_eq!(ec.q.get(t.state, t.action), g);
            assert_eq!(ps.sweeper.q.get(t.state, t.action), g);
        }
    }

    #[test]
    fn drain_matches_value_iteration() {
        let mut rng = RngStream::new(9);
        let report = drain_suite(3, 200, &mut rng).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn drain_with_no_steps_is_exact() {
        let inst = drain_instance(2, &mut RngStream::new(1)).unwrap();
        let out = drain_consistency(&inst.mdp, inst.gamma, 0, &mut RngStream::new(2)).unwrap();
        assert_eq!(out.max_gap, 0.0);
    }

    #[test]
    fn ec_bound_rejects_pessimistic_start() {
        let spec = TmdpSpec::deterministic(2, 5, RewardMode::Intermittent);
        assert!(matches!(ec_bound_check(&spec, 0.0, 10, 1, &mut RngStream::new(1)), Err(Error::Precondition(_))));
    }

    #[test]
    fn ec_bound_freezes_episodic_control() {
        let spec = TmdpSpec::deterministic(2, 5, RewardMode::Intermittent);
        let report = ec_bound_check(&spec, 5.0, 10, 20, &mut RngStream::new(3)).unwrap();
        assert!(report.passed(), "{report}");
    }
}

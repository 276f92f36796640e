//! Finite MDPs with sparse transition rows and deterministic rewards.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type State = usize;
pub type Action = usize;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// One step of experience.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: State,
    pub action: Action,
    pub reward: f64,
    pub next_state: State,
    pub terminal: bool,
}

/// A finite MDP. Rows of the transition table are stored contiguously
/// (compressed sparse rows keyed by `state * num_actions + action`).
///
/// Terminal states have no consulted rows; entering one ends the episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    row_start: Vec<usize>,
    successors: Vec<State>,
    probabilities: Vec<f64>,
    rewards: Vec<f64>,
    terminal: Vec<bool>,
    initial: Vec<(State, f64)>,
}

/// A broken invariant found by [`TabularMdp::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    RowSum { state: State, action: Action, sum: f64 },
    ProbabilityRange { state: State, action: Action, probability: f64 },
    SuccessorOutOfRange { state: State, action: Action, successor: State },
    NonFiniteReward { state: State, action: Action, reward: f64 },
    InitialSum { sum: f64 },
    InitialOutOfRange { state: State },
    InitialTerminal { state: State },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { state, action, sum } => {
                write!(f, "({state}, {action}): row sum {sum} ≠ 1")
            }
            Violation::ProbabilityRange { state, action, probability } => {
                write!(f, "({state}, {action}): probability {probability} outside [0, 1]")
            }
            Violation::SuccessorOutOfRange { state, action, successor } => {
                write!(f, "({state}, {action}): successor index {successor} out of range")
            }
            Violation::NonFiniteReward { state, action, reward } => {
                write!(f, "({state}, {action}): reward {reward} is not finite")
            }
            Violation::InitialSum { sum } => write!(f, "initial distribution sums to {sum} ≠ 1"),
            Violation::InitialOutOfRange { state } => {
                write!(f, "initial state index {state} out of range")
            }
            Violation::InitialTerminal { state } => {
                write!(f, "initial state {state} is terminal")
            }
        }
    }
}

/// Row-by-row builder.
#[derive(Debug)]
pub struct MdpBuilder {
    num_states: usize,
    num_actions: usize,
    rows: Vec<Vec<(State, f64)>>,
    rewards: Vec<f64>,
    terminal: Vec<bool>,
    initial: Vec<(State, f64)>,
}

impl MdpBuilder {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        MdpBuilder {
            num_states,
            num_actions,
            rows: vec![Vec::new(); num_states * num_actions],
            rewards: vec![0.0; num_states * num_actions],
            terminal: vec![false; num_states],
            initial: Vec::new(),
        }
    }

    pub fn row(&mut self, s: State, a: Action, successors: Vec<(State, f64)>) -> &mut Self {
        self.rows[s * self.num_actions + a] = successors;
        self
    }

    pub fn deterministic(&mut self, s: State, a: Action, next: State) -> &mut Self {
        self.row(s, a, vec![(next, 1.0)])
    }

    pub fn reward(&mut self, s: State, a: Action, r: f64) -> &mut Self {
        self.rewards[s * self.num_actions + a] = r;
        self
    }

    pub fn terminal(&mut self, s: State) -> &mut Self {
        self.terminal[s] = true;
        self
    }

    pub fn initial(&mut self, dist: Vec<(State, f64)>) -> &mut Self {
        self.initial = dist;
        self
    }

    /// Builds without checking invariants.
    pub fn build_unchecked(&self) -> TabularMdp {
        let mut row_start = Vec::with_capacity(self.rows.len() + 1);
        let mut successors = Vec::new();
        let mut probabilities = Vec::new();
        row_start.push(0);
        for row in &self.rows {
            for &(s, p) in row {
                successors.push(s);
                probabilities.push(p);
            }
            row_start.push(successors.len());
        }
        TabularMdp {
            num_states: self.num_states,
            num_actions: self.num_actions,
            row_start,
            successors,
            probabilities,
            rewards: self.rewards.clone(),
            terminal: self.terminal.clone(),
            initial: self.initial.clone(),
        }
    }

    pub fn build(&self) -> Result<TabularMdp> {
        let mdp = self.build_unchecked();
        let violations = mdp.validate();
        if violations.is_empty() {
            Ok(mdp)
        } else {
            Err(Error::InvalidMdp(violations.iter().map(ToString::to_string).collect()))
        }
    }
}

impl TabularMdp {
    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn is_terminal(&self, s: State) -> bool {
        self.terminal[s]
    }

    #[inline]
    pub fn reward(&self, s: State, a: Action) -> f64 {
        self.rewards[s * self.num_actions + a]
    }

    /// `(successors, probabilities)` of row `(s, a)`.
    #[inline]
    pub fn row(&self, s: State, a: Action) -> (&[State], &[f64]) {
        let i = s * self.num_actions + a;
        let (lo, hi) = (self.row_start[i], self.row_start[i + 1]);
        (&self.successors[lo..hi], &self.probabilities[lo..hi])
    }

    pub fn initial_states(&self) -> &[(State, f64)] {
        &self.initial
    }

    pub fn terminal_flags(&self) -> &[bool] {
        &self.terminal
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.rewards.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    /// All broken invariants; empty iff the MDP is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let s_count = self.num_states;
        for s in 0..s_count {
            for a in 0..self.num_actions {
                let reward = self.reward(s, a);
                if !reward.is_finite() {
                    out.push(Violation::NonFiniteReward { state: s, action: a, reward });
                }
                if self.terminal[s] {
                    continue;
                }
                let (succ, prob) = self.row(s, a);
                let mut sum = 0.0;
                for (&next, &p) in succ.iter().zip(prob) {
                    if !(0.0..=1.0).contains(&p) {
                        out.push(Violation::ProbabilityRange { state: s, action: a, probability: p });
                    }
                    if next >= s_count {
                        out.push(Violation::SuccessorOutOfRange { state: s, action: a, successor: next });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    out.push(Violation::RowSum { state: s, action: a, sum });
                }
            }
        }
        let mut sum = 0.0;
        for &(s, p) in &self.initial {
            sum += p;
            if s >= s_count {
                out.push(Violation::InitialOutOfRange { state: s });
            } else if self.terminal[s] && p > 0.0 {
                out.push(Violation::InitialTerminal { state: s });
            }
        }
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            out.push(Violation::InitialSum { sum });
        }
        out
    }

    /// Samples one transition from a non-terminal state.
    ///
    /// Single-successor rows consume no randomness.
    ///
    /// # Panics
    /// If `s` is terminal.
    #[inline]
    pub fn step(&self, s: State, a: Action, rng: &mut RngStream) -> Transition {
        assert!(!self.terminal[s], "step called from terminal state {s}");
        let (succ, prob) = self.row(s, a);
        let next = if succ.len() == 1 { succ[0] } else { sample_index(prob, rng).map_or(s, |i| succ[i]) };
        Transition { state: s, action: a, reward: self.reward(s, a), next_state: next, terminal: self.terminal[next] }
    }

    /// Draws a start state.
    pub fn reset(&self, rng: &mut RngStream) -> State {
        if self.initial.len() == 1 {
            return self.initial[0].0;
        }
        let probs: Vec<f64> = self.initial.iter().map(|&(_, p)| p).collect();
        let i = sample_index(&probs, rng).expect("empty initial distribution");
        self.initial[i].0
    }

    /// True if every non-terminal row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        (0..self.num_states)
            .filter(|&s| !self.terminal[s])
            .all(|s| (0..self.num_actions).all(|a| self.row(s, a).0.len() == 1))
    }

    /// A topological order of the non-terminal transition graph, or `None`
    /// if it has a cycle.
    pub fn topological_order(&self) -> Option<Vec<State>> {
        let n = self.num_states;
        let mut indegree = vec![0usize; n];
        for s in (0..n).filter(|&s| !self.terminal[s]) {
            for a in 0..self.num_actions {
                for &next in self.row(s, a).0 {
                    indegree[next] += 1;
                }
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<State> = (0..n).filter(|&s| indegree[s] == 0).collect();
        while let Some(s) = stack.pop() {
            order.push(s);
            if self.terminal[s] {
                continue;
            }
            for a in 0..self.num_actions {
                for &next in self.row(s, a).0 {
                    indegree[next] -= 1;
                    if indegree[next] == 0 {
                        stack.push(next);
                    }
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mdp serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[inline]
fn sample_index(probs: &[f64], rng: &mut RngStream) -> Option<usize> {
    if probs.is_empty() {
        return None;
    }
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Some(i);
        }
    }
    // Rounding left a sliver above the cumulative sum; take the last
    // positive-probability entry.
    probs.iter().rposition(|&p| p > 0.0).or(Some(probs.len() - 1))
}

/// Plain structured-text form: nested `[state][action]` rows.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpDocument {
    num_states: usize,
    num_actions: usize,
    /// `transitions[s][a]` is a list of `[successor, probability]`.
    transitions: Vec<Vec<Vec<(State, f64)>>>,
    rewards: Vec<Vec<f64>>,
    terminal: Vec<bool>,
    initial_states: Vec<(State, f64)>,
}

impl From<TabularMdp> for MdpDocument {
    fn from(m: TabularMdp) -> Self {
        let transitions = (0..m.num_states)
            .map(|s| {
                (0..m.num_actions)
                    .map(|a| {
                        let (succ, prob) = m.row(s, a);
                        succ.iter().copied().zip(prob.iter().copied()).collect()
                    })
                    .collect()
            })
            .collect();
        let rewards = (0..m.num_states).map(|s| (0..m.num_actions).map(|a| m.reward(s, a)).collect()).collect();
        MdpDocument {
            num_states: m.num_states,
            num_actions: m.num_actions,
            transitions,
            rewards,
            terminal: m.terminal,
            initial_states: m.initial,
        }
    }
}

impl TryFrom<MdpDocument> for TabularMdp {
    type Error = String;

    fn try_from(doc: MdpDocument) -> std::result::Result<Self, String> {
        let (ns, na) = (doc.num_states, doc.num_actions);
        if doc.transitions.len() != ns || doc.rewards.len() != ns || doc.terminal.len() != ns {
            return Err(format!("expected {ns} per-state entries"));
        }
        let mut b = MdpBuilder::new(ns, na);
        for (s, (rows, rewards)) in doc.transitions.into_iter().zip(doc.rewards).enumerate() {
            if rows.len() != na || rewards.len() != na {
                return Err(format!("state {s}: expected {na} actions"));
            }
            for (a, (row, r)) in rows.into_iter().zip(rewards).enumerate() {
                b.row(s, a, row).reward(s, a, r);
            }
        }
        for (s, t) in doc.terminal.into_iter().enumerate() {
            if t {
                b.terminal(s);
            }
        }
        b.initial(doc.initial_states);
        Ok(b.build_unchecked())
    }
}

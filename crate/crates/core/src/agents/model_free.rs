//! Model-free baselines: Q-learning, Watkins Q(λ), n-step TD control and
//! constant-α Monte Carlo control.

use crate::mdp::{Action, State, Transition};
use crate::rng::RngStream;

use super::{Agent, Explorer, QTable};

/// Traces below this are dropped.
const TRACE_FLOOR: f64 = 1e-12;

#[inline]
fn bootstrap(q: &QTable, t: &Transition) -> f64 {
    if t.terminal {
        0.0
    } else {
        q.max(t.next_state)
    }
}

/// `Q_sa ← Q_sa + α (r + γ max_b Q_s'b − Q_sa)`, with a zero bootstrap at
/// terminal successors.
pub fn q_learning_update(q: &mut QTable, t: &Transition, alpha: f64, gamma: f64) {
    let target = t.reward + gamma * bootstrap(q, t);
    let old = q.get(t.state, t.action);
    q.set(t.state, t.action, old + alpha * (target - old));
}

/// Sparse accumulating eligibility trace.
#[derive(Clone, Debug)]
pub struct EligibilityTrace {
    values: Vec<f64>,
    active: Vec<usize>,
}

impl EligibilityTrace {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        EligibilityTrace { values: vec![0.0; num_states * num_actions], active: Vec::new() }
    }

    pub fn clear(&mut self) {
        for &i in &self.active {
            self.values[i] = 0.0;
        }
        self.active.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }
}

/// One step of Watkins Q(λ). `greedy` tells whether `t.action` was a greedy
/// choice; an exploratory action cuts all earlier traces before the update.
pub fn q_lambda_update(
    q: &mut QTable,
    trace: &mut EligibilityTrace,
    t: &Transition,
    alpha: f64,
    lambda: f64,
    gamma: f64,
    greedy: bool,
) {
    if !greedy {
        trace.clear();
    }
    let idx = t.state * q.num_actions() + t.action;
    if trace.values[idx] == 0.0 {
        trace.active.push(idx);
    }
    trace.values[idx] += 1.0;

    let delta = t.reward + gamma * bootstrap(q, t) - q.get(t.state, t.action);
    let decay = gamma * lambda;
    let na = q.num_actions();
    let values = &mut trace.values;
    trace.active.retain(|&i| {
        q.add(i / na, i % na, alpha * delta * values[i]);
        values[i] *= decay;
        if values[i] < TRACE_FLOOR {
            values[i] = 0.0;
            false
        } else {
            true
        }
    });
}

/// n-step on-policy update of the first pair of `window`: the target sums
/// the window's discounted rewards and, if `next` is given, adds
/// `γ^len · Q(next)`.
pub fn nstep_td_update(q: &mut QTable, window: &[Transition], next: Option<(State, Action)>, alpha: f64, gamma: f64) {
    let Some(first) = window.first() else { return };
    let mut target = 0.0;
    let mut discount = 1.0;
    for t in window {
        target += discount * t.reward;
        discount *= gamma;
    }
    if let Some((s, a)) = next {
        target += discount * q.get(s, a);
    }
    let old = q.get(first.state, first.action);
    q.set(first.state, first.action, old + alpha * (target - old));
}

/// Every-visit constant-α Monte Carlo over a finished episode.
pub fn mc_update(q: &mut QTable, episode: &[Transition], alpha: f64, gamma: f64) {
    let mut ret = 0.0;
    for t in episode.iter().rev() {
        ret = t.reward + gamma * ret;
        let old = q.get(t.state, t.action);
        q.set(t.state, t.action, old + alpha * (ret - old));
    }
}

#[derive(Clone, Debug)]
pub struct QLearning {
    pub q: QTable,
    explorer: Explorer,
    alpha: f64,
    gamma: f64,
}

impl QLearning {
    pub fn new(q: QTable, explorer: Explorer, alpha: f64, gamma: f64) -> Self {
        QLearning { q, explorer, alpha, gamma }
    }
}

impl Agent for QLearning {
    fn select(&mut self, s: State, rng: &mut RngStream) -> Action {
        self.explorer.select(&self.q, s, rng).action
    }

    fn observe(&mut self, t: &Transition) {
        q_learning_update(&mut self.q, t, self.alpha, self.gamma);
    }

    fn q(&self) -> &QTable {
        &self.q
    }
}

#[derive(Clone, Debug)]
pub struct QLambda {
    pub q: QTable,
    explorer: Explorer,
    trace: EligibilityTrace,
    alpha: f64,
    lambda: f64,
    gamma: f64,
    last_greedy: bool,
}

impl QLambda {
    pub fn new(q: QTable, explorer: Explorer, alpha: f64, lambda: f64, gamma: f64) -> Self {
        let trace = EligibilityTrace::new(q.num_states(), q.num_actions());
        QLambda { q, explorer, trace, alpha, lambda, gamma, last_greedy: true }
    }
}

impl Agent for QLambda {
    fn select(&mut self, s: State, rng: &mut RngStream) -> Action {
        let sel = self.explorer.select(&self.q, s, rng);
        self.last_greedy = sel.greedy;
        sel.action
    }

    fn observe(&mut self, t: &Transition) {
        q_lambda_update(&mut self.q, &mut self.trace, t, self.alpha, self.lambda, self.gamma, self.last_greedy);
    }

    fn end_episode(&mut self) {
        self.trace.clear();
    }

    fn q(&self) -> &QTable {
        &self.q
    }
}

/// n-step SARSA. The update for step `τ` runs once `a_{τ+n}` has been
/// chosen; leftover steps get truncated targets at episode end.
#[derive(Clone, Debug)]
pub struct NStepTd {
    pub q: QTable,
    explorer: Explorer,
    alpha: f64,
    n: usize,
    gamma: f64,
    episode: Vec<Transition>,
    next_update: usize,
}

impl NStepTd {
    pub fn new(q: QTable, explorer: Explorer, alpha: f64, n: usize, gamma: f64) -> Self {
        assert!(n >= 1, "n-step TD needs n ≥ 1");
        NStepTd { q, explorer, alpha, n, gamma, episode: Vec::new(), next_update: 0 }
    }
}

impl Agent for NStepTd {
    fn select(&mut self, s: State, rng: &mut RngStream) -> Action {
        let a = self.explorer.select(&self.q, s, rng).action;
        let t = self.episode.len();
        if t >= self.n {
            let tau = t - self.n;
            debug_assert_eq!(tau, self.next_update);
            nstep_td_update(&mut self.q, &self.episode[tau..t], Some((s, a)), self.alpha, self.gamma);
            self.next_update = tau + 1;
        }
        a
    }

    fn observe(&mut self, t: &Transition) {
        self.episode.push(*t);
    }

    fn end_episode(&mut self) {
        for tau in self.next_update..self.episode.len() {
            nstep_td_update(&mut self.q, &self.episode[tau..], None, self.alpha, self.gamma);
        }
        self.episode.clear();
        self.next_update = 0;
    }

    fn q(&self) -> &QTable {
        &self.q
    }
}

#[derive(Clone, Debug)]
pub struct MonteCarlo {
    pub q: QTable,
    explorer: Explorer,
    alpha: f64,
    gamma: f64,
    episode: Vec<Transition>,
}

impl MonteCarlo {
    pub fn new(q: QTable, explorer: Explorer, alpha: f64, gamma: f64) -> Self {
        MonteCarlo { q, explorer, alpha, gamma, episode: Vec::new() }
    }
}

impl Agent for MonteCarlo {
    fn select(&mut self, s: State, rng: &mut RngStream) -> Action {
        self.explorer.select(&self.q, s, rng).action
    }

    fn observe(&mut self, t: &Transition) {
        self.episode.push(*t);
    }

    fn end_episode(&mut self) {
        mc_update(&mut self.q, &self.episode, self.alpha, self.gamma);
        self.episode.clear();
    }

    fn q(&self) -> &QTable {
        &self.q
    }
}

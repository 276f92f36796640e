//! Prioritized sweeping with small backups.
//!
//! The sweeper maintains, for every visited pair, the consistency relation
//!
//! ```text
//! Q_sa = R̂_sa + γ Σ_s' T̂_sas' U_s'
//! ```
//!
//! where `U_s` is the value of `s` last propagated to its predecessors.
//! A backup of `s*` moves `U_s*` to `V_s*` and adds `γ T̂ ΔV` to every
//! predecessor pair, which preserves the relation exactly.

use serde::{Deserialize, Serialize};

use crate::mdp::{State, Transition};
use crate::rng::RngStream;

use super::{Agent, EmpiricalModel, Explorer, MaxPriorityQueue, ModelMode, QTable};

#[derive(Clone, Debug)]
pub struct Sweeper {
    pub q: QTable,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub model: EmpiricalModel,
    pub queue: MaxPriorityQueue,
    terminal: Vec<bool>,
    gamma: f64,
}

impl Sweeper {
    pub fn new(num_states: usize, num_actions: usize, gamma: f64, q0: f64, mode: ModelMode) -> Self {
        Sweeper {
            q: QTable::new(num_states, num_actions, q0),
            v: vec![q0; num_states],
            u: vec![q0; num_states],
            model: EmpiricalModel::new(num_states, num_actions, mode),
            queue: MaxPriorityQueue::new(num_states),
            terminal: vec![false; num_states],
            gamma,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Terminal states discovered so far.
    pub fn terminal_flags(&self) -> &[bool] {
        &self.terminal
    }

    #[inline]
    fn pending(&self, s: State) -> f64 {
        (self.v[s] - self.u[s]).abs()
    }

    /// `R̂_sa + γ Σ T̂_sas' U_s'` from the current model.
    #[inline]
    pub fn consistent_value(&self, s: State, a: usize) -> f64 {
        let bootstrap: f64 = self.model.successors(s, a).map(|(n, p)| p * self.u[n]).sum();
        self.model.reward(s, a) + self.gamma * bootstrap
    }

    /// Records `t` in the model and refreshes `Q_sa` and `V_s`. With
    /// `enqueue`, `s` goes on the queue with priority `|V_s − U_s|`.
    pub fn observe(&mut self, t: &Transition, enqueue: bool) {
        if t.terminal && !self.terminal[t.next_state] {
            self.terminal[t.next_state] = true;
            self.v[t.next_state] = 0.0;
            self.u[t.next_state] = 0.0;
        }
        self.model.observe(t);
        let value = self.consistent_value(t.state, t.action);
        self.q.set(t.state, t.action, value);
        self.v[t.state] = self.q.max(t.state);
        if enqueue {
            self.enqueue(t.state);
        }
    }

    #[inline]
    pub fn enqueue(&mut self, s: State) {
        let p = self.pending(s);
        if p > 0.0 {
            self.queue.push(s, p);
        }
    }

    /// Up to `budget` backups in priority order; returns the number done.
    pub fn plan(&mut self, budget: usize) -> usize {
        let mut done = 0;
        while done < budget {
            let Some((s, _)) = self.queue.pop() else { break };
            done += 1;
            let dv = self.v[s] - self.u[s];
            self.u[s] = self.v[s];
            if dv == 0.0 {
                continue;
            }
            for &(ps, pa) in self.model.predecessors(s) {
                let p = self.model.prob(ps, pa, s);
                self.q.add(ps, pa, self.gamma * p * dv);
                self.v[ps] = self.q.max(ps);
                let pr = (self.v[ps] - self.u[ps]).abs();
                if pr > 0.0 {
                    self.queue.push(ps, pr);
                }
            }
        }
        done
    }

    /// End of episode with model reset: queue the final state, run at most
    /// `budget` backups, then forget the model and the queue. Q, V and U
    /// are kept.
    pub fn end_episode_with_reset(&mut self, last_state: State, budget: usize) -> usize {
        self.enqueue(last_state);
        let done = self.plan(budget);
        self.model.reset();
        self.queue.clear();
        done
    }

    /// Largest `|Q_sa − (R̂_sa + γ Σ T̂ U)|` over visited pairs.
    pub fn consistency_gap(&self) -> f64 {
        self.model
            .visited_pairs()
            .map(|(s, a)| (self.q.get(s, a) - self.consistent_value(s, a)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|V_s − max_a Q_sa|` over non-terminal states.
    pub fn coherence_gap(&self) -> f64 {
        (0..self.v.len()).filter(|&s| !self.terminal[s]).map(|s| (self.v[s] - self.q.max(s)).abs()).fold(0.0, f64::max)
    }
}

/// Online prioritized sweeping: a fixed number of backups after every step.
#[derive(Clone, Debug)]
pub struct PrioritizedSweeping {
    pub sweeper: Sweeper,
    explorer: Explorer,
    backups_per_step: usize,
}

impl PrioritizedSweeping {
    pub fn new(sweeper: Sweeper, explorer: Explorer, backups_per_step: usize) -> Self {
        PrioritizedSweeping { sweeper, explorer, backups_per_step }
    }
}

impl Agent for PrioritizedSweeping {
    fn select(&mut self, s: State, rng: &mut RngStream) -> usize {
        self.explorer.select(&self.sweeper.q, s, rng).action
    }

    fn observe(&mut self, t: &Transition) {
        self.sweeper.observe(t, true);
    }

    fn plan(&mut self) {
        self.sweeper.plan(self.backups_per_step);
    }

    fn q(&self) -> &QTable {
        &self.sweeper.q
    }
}

/// Which states [`SweepingWithReset`] queues before its end-of-episode sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetQueue {
    /// Only the final state of the episode.
    #[default]
    LastState,
    /// Every state visited during the episode, by its pending priority.
    Visited,
}

/// Prioritized sweeping that plans only at episode end, with at most as many
/// backups as the episode had steps, and then resets its model.
#[derive(Clone, Debug)]
pub struct SweepingWithReset {
    pub sweeper: Sweeper,
    explorer: Explorer,
    queue: ResetQueue,
    last_state: Option<State>,
    episode_len: usize,
}

impl SweepingWithReset {
    pub fn new(sweeper: Sweeper, explorer: Explorer) -> Self {
        Self::with_queue(sweeper, explorer, ResetQueue::LastState)
    }

    pub fn with_queue(sweeper: Sweeper, explorer: Explorer, queue: ResetQueue) -> Self {
        SweepingWithReset { sweeper, explorer, queue, last_state: None, episode_len: 0 }
    }
}

impl Agent for SweepingWithReset {
    fn select(&mut self, s: State, rng: &mut RngStream) -> usize {
        self.explorer.select(&self.sweeper.q, s, rng).action
    }

    fn observe(&mut self, t: &Transition) {
        self.sweeper.observe(t, self.queue == ResetQueue::Visited);
        self.last_state = Some(t.state);
        self.episode_len += 1;
    }

    fn end_episode(&mut self) {
        if let Some(last) = self.last_state.take() {
            self.sweeper.end_episode_with_reset(last, self.episode_len);
        }
        self.episode_len = 0;
    }

    fn q(&self) -> &QTable {
        &self.sweeper.q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(s: State, a: usize, r: f64, n: State, terminal: bool) -> Transition {
        Transition { state: s, action: a, reward: r, next_state: n, terminal }
    }

    #[test]
    fn first_transition_takes_reward() {
        let mut sw = Sweeper::new(3, 2, 1.0, 0.0, ModelMode::Counting);
        sw.observe(&tr(0, 1, 1.0, 1, false), true);
        assert_eq!(sw.q.get(0, 1), 1.0);
        assert_eq!(sw.v[0], 1.0);
        assert_eq!(sw.queue.priority(0), Some(1.0));
    }

    #[test]
    fn second_visit_averages_reward() {
        let mut sw = Sweeper::new(3, 1, 1.0, 0.0, ModelMode::Counting);
        sw.observe(&tr(0, 0, 1.0, 1, false), true);
        sw.observe(&tr(0, 0, 0.0, 1, false), true);
        assert_eq!(sw.q.get(0, 0), 0.5);
    }

    #[test]
    fn bootstraps_from_propagated_value() {
        let mut sw = Sweeper::new(3, 1, 0.5, 0.0, ModelMode::Counting);
        sw.u[1] = 2.0;
        sw.observe(&tr(0, 0, 1.0, 1, false), true);
        assert_eq!(sw.q.get(0, 0), 2.0);
    }

    #[test]
    fn empty_queue_plans_nothing() {
        let mut sw = Sweeper::new(3, 1, 1.0, 0.0, ModelMode::Counting);
        let before = sw.q.clone();
        assert_eq!(sw.plan(10), 0);
        assert_eq!(sw.q, before);
    }

    #[test]
    fn chain_backup_in_two_steps() {
        // s0 -a0-> s1 -a1-> s2 -a0-> terminal (reward 1)
        let mut sw = Sweeper::new(4, 2, 1.0, 0.0, ModelMode::Counting);
        sw.observe(&tr(0, 0, 0.0, 1, false), false);
        sw.observe(&tr(1, 1, 0.0, 2, false), false);
        sw.observe(&tr(2, 0, 1.0, 3, true), false);
        sw.enqueue(2);
        assert_eq!(sw.plan(2), 2);
        assert_eq!(sw.q.get(1, 1), 1.0);
        assert_eq!(sw.q.get(0, 0), 1.0);
        assert_eq!(sw.q.get(1, 0), 0.0);
        assert!(sw.consistency_gap() < 1e-12);
    }

    #[test]
    fn zero_delta_pop_changes_nothing() {
        let mut sw = Sweeper::new(3, 1, 1.0, 0.0, ModelMode::Counting);
        sw.observe(&tr(0, 0, 0.0, 1, false), false);
        sw.queue.push(1, 1.0);
        let q = sw.q.clone();
        sw.plan(1);
        assert_eq!(sw.q, q);
        assert!(sw.queue.is_empty());
    }

    #[test]
    fn reset_clears_counts_keeps_values() {
        let mut sw = Sweeper::new(4, 2, 1.0, 0.0, ModelMode::Counting);
        sw.observe(&tr(0, 0, 0.5, 1, false), false);
        sw.observe(&tr(1, 0, 0.5, 2, true), false);
        sw.end_episode_with_reset(1, 2);
        assert_eq!(sw.q.get(0, 0), 1.0);
        for s in 0..4 {
            for a in 0..2 {
                assert_eq!(sw.model.visits(s, a), 0);
            }
        }
        assert!(sw.queue.is_empty());
    }

    fn replay(queue: ResetQueue) -> SweepingWithReset {
        let sweeper = Sweeper::new(5, 1, 1.0, 0.0, ModelMode::Counting);
        let explorer = Explorer::new(5, 1, 0.0, crate::agents::EpsilonMode::NonGreedy, false);
        let mut agent = SweepingWithReset::with_queue(sweeper, explorer, queue);
        for episode in [&[(0, 1), (1, 2)][..], &[(4, 3), (3, 1), (1, 2)]] {
            for &(s, n) in episode {
                agent.observe(&tr(s, 0, if n == 2 { 1.0 } else { 0.0 }, n, n == 2));
            }
            agent.end_episode();
        }
        agent
    }

    #[test]
    fn visited_queue_reaches_states_behind_a_settled_last_state() {
        // The second episode ends at state 1, whose value was already
        // propagated, so only the visited policy backs up state 3.
        assert_eq!(replay(ResetQueue::LastState).sweeper.q.get(4, 0), 0.0);
        assert_eq!(replay(ResetQueue::Visited).sweeper.q.get(4, 0), 1.0);
        assert_eq!(replay(ResetQueue::LastState).sweeper.q.get(3, 0), 1.0);
    }
}

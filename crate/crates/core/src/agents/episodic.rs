use crate::mdp::{State, Transition};
use crate::rng::RngStream;

use super::{Agent, Explorer, QTable};

/// Backward pass over an episode: `Q(s_t, a_t) ← max(Q(s_t, a_t), G_t)`.
pub fn ec_update(q: &mut QTable, episode: &[Transition], gamma: f64) {
    let mut ret = 0.0;
    for t in episode.iter().rev() {
        ret = t.reward + gamma * ret;
        if ret > q.get(t.state, t.action) {
            q.set(t.state, t.action, ret);
        }
    }
}

/// Episodic control: remembers the best return seen from every pair.
#[derive(Clone, Debug)]
pub struct EpisodicControl {
    pub q: QTable,
    explorer: Explorer,
    gamma: f64,
    buffer: Vec<Transition>,
}

impl EpisodicControl {
    pub fn new(q: QTable, explorer: Explorer, gamma: f64) -> Self {
        EpisodicControl { q, explorer, gamma, buffer: Vec::new() }
    }
}

impl Agent for EpisodicControl {
    fn select(&mut self, s: State, rng: &mut RngStream) -> usize {
        self.explorer.select(&self.q, s, rng).action
    }

    fn observe(&mut self, t: &Transition) {
        debug_assert!(self.buffer.last().is_none_or(|p| p.next_state == t.state));
        self.buffer.push(*t);
    }

    fn end_episode(&mut self) {
        ec_update(&mut self.q, &self.buffer, self.gamma);
        self.buffer.clear();
    }

    fn q(&self) -> &QTable {
        &self.q
    }
}

//! Learned transition and reward estimates with a predecessor index.

use crate::mdp::{Action, State, Transition};

/// How observations update a row of the transition estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ModelMode {
    /// Maximum-likelihood estimate from visit counts.
    #[default]
    Counting,
    /// Recency-weighted: the row decays by `1 - kappa` and the observed
    /// successor gains `kappa`.
    Leaky { kappa: f64 },
    /// The row is a point mass on the last observed successor.
    Deterministic,
}

#[derive(Clone, Debug, Default)]
struct PairStats {
    visits: u64,
    /// Reward sum (counting) or running estimate (other modes).
    reward: f64,
    /// `(successor, count)` in counting mode, `(successor, probability)`
    /// otherwise.
    successors: Vec<(State, f64)>,
}

#[derive(Clone, Debug)]
pub struct EmpiricalModel {
    num_actions: usize,
    mode: ModelMode,
    pairs: Vec<PairStats>,
    predecessors: Vec<Vec<(State, Action)>>,
    touched: Vec<usize>,
}

impl EmpiricalModel {
    pub fn new(num_states: usize, num_actions: usize, mode: ModelMode) -> Self {
        EmpiricalModel {
            num_actions,
            mode,
            pairs: vec![PairStats::default(); num_states * num_actions],
            predecessors: vec![Vec::new(); num_states],
            touched: Vec::new(),
        }
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn num_states(&self) -> usize {
        self.predecessors.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    fn index(&self, s: State, a: Action) -> usize {
        s * self.num_actions + a
    }

    #[inline]
    pub fn visits(&self, s: State, a: Action) -> u64 {
        self.pairs[self.index(s, a)].visits
    }

    #[inline]
    pub fn is_visited(&self, s: State, a: Action) -> bool {
        self.visits(s, a) > 0
    }

    /// Estimated expected reward `R̂_sa` (0 if unvisited).
    #[inline]
    pub fn reward(&self, s: State, a: Action) -> f64 {
        let p = &self.pairs[self.index(s, a)];
        match self.mode {
            ModelMode::Counting if p.visits > 0 => p.reward / p.visits as f64,
            ModelMode::Counting => 0.0,
            _ => p.reward,
        }
    }

    /// Estimated probability `T̂_sas'`.
    #[inline]
    pub fn prob(&self, s: State, a: Action, next: State) -> f64 {
        let p = &self.pairs[self.index(s, a)];
        let w = p.successors.iter().find(|&&(n, _)| n == next).map_or(0.0, |&(_, w)| w);
        self.weight_to_prob(p, w)
    }

    #[inline]
    fn weight_to_prob(&self, p: &PairStats, w: f64) -> f64 {
        match self.mode {
            ModelMode::Counting => w / p.visits as f64,
            _ => w,
        }
    }

    /// `(s', T̂_sas')` for every recorded successor.
    pub fn successors(&self, s: State, a: Action) -> impl Iterator<Item = (State, f64)> + '_ {
        let p = &self.pairs[self.index(s, a)];
        p.successors.iter().map(move |&(n, w)| (n, self.weight_to_prob(p, w)))
    }

    /// Pairs `(s̄, ā)` with `T̂_{s̄ās} > 0`.
    #[inline]
    pub fn predecessors(&self, s: State) -> &[(State, Action)] {
        &self.predecessors[s]
    }

    /// Visited pairs in first-visit order.
    pub fn visited_pairs(&self) -> impl Iterator<Item = (State, Action)> + '_ {
        self.touched.iter().map(move |&i| (i / self.num_actions, i % self.num_actions))
    }

    pub fn observe(&mut self, t: &Transition) {
        let i = self.index(t.state, t.action);
        let pred = (t.state, t.action);
        let mode = self.mode;
        let stats = &mut self.pairs[i];
        if stats.visits == 0 {
            self.touched.push(i);
        }
        stats.visits += 1;
        match mode {
            ModelMode::Counting => {
                stats.reward += t.reward;
                match stats.successors.iter_mut().find(|(n, _)| *n == t.next_state) {
                    Some((_, c)) => *c += 1.0,
                    None => {
                        stats.successors.push((t.next_state, 1.0));
                        self.predecessors[t.next_state].push(pred);
                    }
                }
            }
            ModelMode::Leaky { kappa } => {
                if stats.visits == 1 {
                    stats.reward = t.reward;
                    stats.successors.push((t.next_state, 1.0));
                    self.predecessors[t.next_state].push(pred);
                } else {
                    stats.reward = (1.0 - kappa) * stats.reward + kappa * t.reward;
                    let mut found = false;
                    for (n, p) in stats.successors.iter_mut() {
                        *p *= 1.0 - kappa;
                        if *n == t.next_state {
                            *p += kappa;
                            found = true;
                        }
                    }
                    if !found {
                        stats.successors.push((t.next_state, kappa));
                        self.predecessors[t.next_state].push(pred);
                    }
                }
            }
            ModelMode::Deterministic => {
                stats.reward = t.reward;
                let old = stats.successors.first().map(|&(n, _)| n);
                if old != Some(t.next_state) {
                    stats.successors.clear();
                    stats.successors.push((t.next_state, 1.0));
                    if let Some(old) = old {
                        self.predecessors[old].retain(|&p| p != pred);
                    }
                    self.predecessors[t.next_state].push(pred);
                }
            }
        }
    }

    /// Forgets every observation.
    pub fn reset(&mut self) {
        for &i in &self.touched {
            let stats = &mut self.pairs[i];
            for &(n, _) in &stats.successors {
                self.predecessors[n].clear();
            }
            stats.successors.clear();
            stats.visits = 0;
            stats.reward = 0.0;
        }
        self.touched.clear();
    }
}

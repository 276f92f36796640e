use crate::mdp::{Action, State};

/// Dense `S × A` action values.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    num_actions: usize,
    init: f64,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(num_states: usize, num_actions: usize, init: f64) -> Self {
        QTable { num_actions, init, values: vec![init; num_states * num_actions] }
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_states(&self) -> usize {
        self.values.len() / self.num_actions
    }

    pub fn init_value(&self) -> f64 {
        self.init
    }

    #[inline]
    pub fn get(&self, s: State, a: Action) -> f64 {
        self.values[s * self.num_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: State, a: Action, v: f64) {
        self.values[s * self.num_actions + a] = v;
    }

    #[inline]
    pub fn add(&mut self, s: State, a: Action, dv: f64) {
        self.values[s * self.num_actions + a] += dv;
    }

    #[inline]
    pub fn row(&self, s: State) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    #[inline]
    pub fn max(&self, s: State) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn from_values(num_actions: usize, init: f64, values: Vec<f64>) -> Self {
        assert_eq!(values.len() % num_actions, 0);
        QTable { num_actions, init, values }
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

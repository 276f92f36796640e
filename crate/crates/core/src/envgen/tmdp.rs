//! Random tree MDPs.
//!
//! States are numbered breadth first. In a deterministic tree the child of
//! node `i` under action `a` is `A·i + 1 + a`; in a stochastic tree node `i`
//! owns the children `b·i + 1 .. b·i + b`, shared by all of its actions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{MdpBuilder, TabularMdp};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Rewards only on transitions entering leaves.
    TerminalOnly,
    /// A reward on every state-action pair.
    Intermittent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmdpSpec {
    pub actions: usize,
    pub depth: usize,
    /// 1 for a deterministic tree.
    #[serde(default = "one")]
    pub branching: usize,
    pub rewards: RewardMode,
    /// Round rewards up to multiples of `2^-bits` so that sums are exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum_bits: Option<u32>,
}

fn one() -> usize {
    1
}

impl TmdpSpec {
    pub fn deterministic(actions: usize, depth: usize, rewards: RewardMode) -> Self {
        TmdpSpec { actions, depth, branching: 1, rewards, quantum_bits: None }
    }

    pub fn stochastic(actions: usize, depth: usize, branching: usize, rewards: RewardMode) -> Self {
        TmdpSpec { actions, depth, branching, rewards, quantum_bits: None }
    }

    pub fn quantized(mut self, bits: u32) -> Self {
        self.quantum_bits = Some(bits);
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.actions < 2 || self.depth < 1 || self.branching < 1 {
            return Err(Error::InvalidSpec(format!(
                "tree needs A ≥ 2, d ≥ 1, b ≥ 1 (got A={}, d={}, b={})",
                self.actions, self.depth, self.branching
            )));
        }
        if matches!(self.quantum_bits, Some(b) if b > 52) {
            return Err(Error::InvalidSpec("quantum_bits must be ≤ 52".into()));
        }
        Ok(())
    }

    /// Nodes per level for this tree's fan-out.
    fn fan_out(&self) -> usize {
        if self.branching == 1 {
            self.actions
        } else {
            self.branching
        }
    }

    pub fn num_states(&self) -> usize {
        geometric_count(self.fan_out(), self.depth + 1)
    }

    /// Number of non-leaf states.
    pub fn num_internal(&self) -> usize {
        geometric_count(self.fan_out(), self.depth)
    }

    /// Index of the first node of `level`.
    pub fn level_start(&self, level: usize) -> usize {
        geometric_count(self.fan_out(), level)
    }

    fn draw_reward(&self, rng: &mut RngStream) -> f64 {
        let u = rng.next_f64_left_open();
        match self.quantum_bits {
            Some(bits) => {
                let scale = (1u64 << bits) as f64;
                (u * scale).ceil() / scale
            }
            None => u,
        }
    }

    fn rewarded(&self, s: usize) -> bool {
        match self.rewards {
            RewardMode::Intermittent => true,
            RewardMode::TerminalOnly => s >= self.level_start(self.depth - 1),
        }
    }
}

/// `1 + k + k² + … + k^(levels-1)`.
fn geometric_count(k: usize, levels: usize) -> usize {
    let mut total = 0;
    let mut width = 1;
    for _ in 0..levels {
        total += width;
        width *= k;
    }
    total
}

/// Rooted `A`-ary tree of depth `d`; every pair leads to its own child.
pub fn gen_det_tmdp(spec: &TmdpSpec, rng: &mut RngStream) -> Result<TabularMdp> {
    spec.check()?;
    if spec.branching != 1 {
        return Err(Error::InvalidSpec("deterministic tree requires branching = 1".into()));
    }
    let a_count = spec.actions;
    let mut b = MdpBuilder::new(spec.num_states(), a_count);
    for s in 0..spec.num_internal() {
        for a in 0..a_count {
            b.deterministic(s, a, a_count * s + 1 + a);
            if spec.rewarded(s) {
                b.reward(s, a, spec.draw_reward(rng));
            }
        }
    }
    for leaf in spec.num_internal()..spec.num_states() {
        b.terminal(leaf);
    }
    b.initial(vec![(0, 1.0)]);
    b.build()
}

/// Tree with `b` children per node. Each action of a node has its own
/// probability vector over those children, drawn uniformly from the simplex.
pub fn gen_stoch_tmdp(spec: &TmdpSpec, rng: &mut RngStream) -> Result<TabularMdp> {
    spec.check()?;
    if spec.branching < 2 {
        return Err(Error::InvalidSpec("stochastic tree requires branching ≥ 2".into()));
    }
    let k = spec.branching;
    let mut b = MdpBuilder::new(spec.num_states(), spec.actions);
    for s in 0..spec.num_internal() {
        let first_child = k * s + 1;
        for a in 0..spec.actions {
            let probs = simplex(k, rng);
            b.row(s, a, (first_child..first_child + k).zip(probs).collect());
            if spec.rewarded(s) {
                b.reward(s, a, spec.draw_reward(rng));
            }
        }
    }
    for leaf in spec.num_internal()..spec.num_states() {
        b.terminal(leaf);
    }
    b.initial(vec![(0, 1.0)]);
    b.build()
}

/// Dispatches on the branching factor.
pub fn gen_tmdp(spec: &TmdpSpec, rng: &mut RngStream) -> Result<TabularMdp> {
    if spec.branching == 1 {
        gen_det_tmdp(spec, rng)
    } else {
        gen_stoch_tmdp(spec, rng)
    }
}

/// Uniform point on the `k-1` simplex via normalized exponentials.
fn simplex(k: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k)
        .map(|_| {
            // (0, 1) strictly, so every weight is positive.
            let u = loop {
                let u = rng.next_f64();
                if u > 0.0 {
                    break u;
                }
            };
            -u.ln()
        })
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

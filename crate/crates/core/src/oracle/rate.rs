//! Long-run reward per step of a fixed policy under the restart convention:
//! on reaching a terminal state the process jumps to a fresh initial state
//! (the jump itself takes no step).

use nalgebra::{DMatrix, DVector};

use crate::agents::{EpsilonMode, QTable};
use crate::error::{Error, Result};
use crate::mdp::{State, TabularMdp};
use crate::rng::RngStream;

/// A stationary stochastic policy, row-major `π(a | s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    num_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Policy { num_actions, probs: vec![1.0 / num_actions as f64; num_states * num_actions] }
    }

    /// ε-greedy over `q`, matching the agents' selection rule. Actions within
    /// `tie_tol` of the row maximum count as greedy.
    pub fn epsilon_greedy(q: &QTable, epsilon: f64, mode: EpsilonMode, tie_tol: f64) -> Self {
        let na = q.num_actions();
        let mut probs = Vec::with_capacity(q.num_states() * na);
        for s in 0..q.num_states() {
            let row = q.row(s);
            let best = q.max(s);
            let greedy: Vec<bool> = row.iter().map(|&x| x >= best - tie_tol).collect();
            let ng = greedy.iter().filter(|&&g| g).count() as f64;
            let n = na as f64;
            for &g in &greedy {
                let p = match mode {
                    EpsilonMode::AllActions => epsilon / n + if g { (1.0 - epsilon) / ng } else { 0.0 },
                    EpsilonMode::NonGreedy if ng == n => 1.0 / n,
                    EpsilonMode::NonGreedy if g => (1.0 - epsilon) / ng,
                    EpsilonMode::NonGreedy => epsilon / (n - ng),
                };
                probs.push(p);
            }
        }
        Policy { num_actions: na, probs }
    }

    pub fn from_probs(num_actions: usize, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len() % num_actions, 0);
        Policy { num_actions, probs }
    }

    #[inline]
    pub fn row(&self, s: State) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn sample(&self, s: State, rng: &mut RngStream) -> usize {
        let u = rng.next_f64();
        let mut acc = 0.0;
        let row = self.row(s);
        for (a, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Expected visits to each state per episode (zero for terminal states).
fn occupancy(mdp: &TabularMdp, policy: &Policy) -> Result<Vec<f64>> {
    let ns = mdp.num_states();
    let mut x = vec![0.0; ns];
    for &(s, p) in mdp.initial_states() {
        x[s] += p;
    }
    let flow = |s: State, f: &mut dyn FnMut(State, f64)| {
        for (a, &pa) in policy.row(s).iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let (succ, prob) = mdp.row(s, a);
            for (&n, &p) in succ.iter().zip(prob) {
                if !mdp.is_terminal(n) {
                    f(n, pa * p);
                }
            }
        }
    };
    if let Some(order) = mdp.topological_order() {
        for &s in &order {
            if mdp.is_terminal(s) || x[s] == 0.0 {
                continue;
            }
            let mass = x[s];
            flow(s, &mut |n, p| x[n] += mass * p);
        }
        return Ok(x);
    }
    let live: Vec<State> = (0..ns).filter(|&s| !mdp.is_terminal(s)).collect();
    let mut index = vec![usize::MAX; ns];
    for (i, &s) in live.iter().enumerate() {
        index[s] = i;
    }
    let n = live.len();
    // (I − Pᵀ) x = x0
    let mut a_mat = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (i, &s) in live.iter().enumerate() {
        b[i] = x[s];
        flow(s, &mut |next, p| a_mat[(index[next], i)] -= p);
    }
    let sol = a_mat
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::DegenerateChain("policy never reaches a terminal state from some start".into()))?;
    let mut out = vec![0.0; ns];
    for (i, &s) in live.iter().enumerate() {
        out[s] = sol[i];
    }
    if out.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return Err(Error::DegenerateChain("occupancy solve is not a valid measure".into()));
    }
    Ok(out)
}

/// Stationary distribution of the restart chain over non-terminal states.
pub fn stationary_distribution(mdp: &TabularMdp, policy: &Policy) -> Result<Vec<f64>> {
    let x = occupancy(mdp, policy)?;
    let total: f64 = x.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::DegenerateChain("episodes have no expected length".into()));
    }
    Ok(x.into_iter().map(|v| v / total).collect())
}

/// Exact `Σ_s μ(s) Σ_a π(a|s) R_sa`.
pub fn expected_reward_rate(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    let mu = stationary_distribution(mdp, policy)?;
    Ok(mu
        .iter()
        .enumerate()
        .filter(|&(_, &m)| m > 0.0)
        .map(|(s, &m)| {
            let r: f64 = policy.row(s).iter().enumerate().map(|(a, &p)| p * mdp.reward(s, a)).sum();
            m * r
        })
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub mean: f64,
    /// Batch-means standard error.
    pub std_err: f64,
}

/// Monte-Carlo reward rate over `steps` steps of the restart chain.
pub fn simulate_reward_rate(mdp: &TabularMdp, policy: &Policy, steps: usize, rng: &mut RngStream) -> RateEstimate {
    const BATCHES: usize = 100;
    let batch = (steps / BATCHES).max(1);
    let mut means = Vec::with_capacity(BATCHES);
    let mut s = mdp.reset(rng);
    let mut done = 0;
    while done < steps {
        let len = batch.min(steps - done);
        let mut total = 0.0;
        for _ in 0..len {
            let a = policy.sample(s, rng);
            let t = mdp.step(s, a, rng);
            total += t.reward;
            s = if t.terminal { mdp.reset(rng) } else { t.next_state };
        }
        means.push(total / len as f64);
        done += len;
    }
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let var = if means.len() > 1 { means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    RateEstimate { mean, std_err: (var / k).sqrt() }
}

/// Reward rates of the uniform-random policy and of ε-greedy over `Q*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateBaselines {
    pub r_uniform: f64,
    pub r_opt: f64,
}

impl RateBaselines {
    pub fn compute(mdp: &TabularMdp, q_star: &QTable, epsilon: f64, mode: EpsilonMode) -> Result<Self> {
        let uniform = Policy::uniform(mdp.num_states(), mdp.num_actions());
        let tie_tol = 1e-9 * mdp.max_abs_reward().max(1.0);
        let opt = Policy::epsilon_greedy(q_star, epsilon, mode, tie_tol);
        let baselines =
            RateBaselines { r_uniform: expected_reward_rate(mdp, &uniform)?, r_opt: expected_reward_rate(mdp, &opt)? };
        baselines.check()?;
        Ok(baselines)
    }

    pub fn check(&self) -> Result<()> {
        if (self.r_opt - self.r_uniform).abs() <= 1e-12 {
            return Err(Error::DegenerateBaselines { r_uniform: self.r_uniform, r_opt: self.r_opt });
        }
        Ok(())
    }

    /// `(r − r_uniform) / (r_opt − r_uniform)`.
    pub fn normalize(&self, rate: f64) -> Result<f64> {
        self.check()?;
        Ok((rate - self.r_uniform) / (self.r_opt - self.r_uniform))
    }
}

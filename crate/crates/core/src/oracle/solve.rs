//! Exact and iterative solvers for the Bellman optimality equation
//! `Q_sa = R_sa + γ Σ_s' T_sas' max_a' Q_s'a'`.

use nalgebra::{DMatrix, DVector};

use crate::agents::{EmpiricalModel, QTable};
use crate::error::{Error, Result};
use crate::mdp::{Action, State, TabularMdp};

const PI_MAX_ITERATIONS: usize = 10_000;
const VI_MAX_ITERATIONS: usize = 10_000_000;

/// Read access to a (true or learned) model for Bellman backups.
pub trait BellmanModel {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn is_terminal(&self, s: State) -> bool;
    /// Pairs without a row keep their initial value.
    fn has_row(&self, s: State, a: Action) -> bool;
    fn reward(&self, s: State, a: Action) -> f64;
    fn for_each_successor(&self, s: State, a: Action, f: impl FnMut(State, f64));
}

impl BellmanModel for TabularMdp {
    fn num_states(&self) -> usize {
        TabularMdp::num_states(self)
    }

    fn num_actions(&self) -> usize {
        TabularMdp::num_actions(self)
    }

    fn is_terminal(&self, s: State) -> bool {
        TabularMdp::is_terminal(self, s)
    }

    fn has_row(&self, s: State, _a: Action) -> bool {
        !TabularMdp::is_terminal(self, s)
    }

    fn reward(&self, s: State, a: Action) -> f64 {
        TabularMdp::reward(self, s, a)
    }

    fn for_each_successor(&self, s: State, a: Action, mut f: impl FnMut(State, f64)) {
        let (succ, prob) = self.row(s, a);
        for (&n, &p) in succ.iter().zip(prob) {
            f(n, p);
        }
    }
}

/// A learned model seen as an MDP: `(R̂, T̂)` on visited pairs, with the
/// terminal states the learner has discovered.
pub struct EmpiricalSnapshot<'a> {
    pub model: &'a EmpiricalModel,
    pub terminal: &'a [bool],
}

impl BellmanModel for EmpiricalSnapshot<'_> {
    fn num_states(&self) -> usize {
        self.model.num_states()
    }

    fn num_actions(&self) -> usize {
        self.model.num_actions()
    }

    fn is_terminal(&self, s: State) -> bool {
        self.terminal[s]
    }

    fn has_row(&self, s: State, a: Action) -> bool {
        self.model.is_visited(s, a)
    }

    fn reward(&self, s: State, a: Action) -> f64 {
        self.model.reward(s, a)
    }

    fn for_each_successor(&self, s: State, a: Action, mut f: impl FnMut(State, f64)) {
        for (n, p) in self.model.successors(s, a) {
            f(n, p);
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimalSolution {
    pub q: QTable,
    pub v: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm Bellman error of `q`.
    pub residual: f64,
}

fn state_values<M: BellmanModel>(m: &M, q: &QTable) -> Vec<f64> {
    (0..m.num_states()).map(|s| if m.is_terminal(s) { 0.0 } else { q.max(s) }).collect()
}

#[inline]
fn backup<M: BellmanModel>(m: &M, v: &[f64], gamma: f64, s: State, a: Action) -> f64 {
    let mut acc = 0.0;
    m.for_each_successor(s, a, |n, p| acc += p * v[n]);
    m.reward(s, a) + gamma * acc
}

/// One synchronous Bellman backup of every modelled pair.
fn bellman_q<M: BellmanModel>(m: &M, v: &[f64], gamma: f64, q: &mut QTable) {
    for s in (0..m.num_states()).filter(|&s| !m.is_terminal(s)) {
        for a in 0..m.num_actions() {
            if m.has_row(s, a) {
                q.set(s, a, backup(m, v, gamma, s, a));
            }
        }
    }
}

/// Sup-norm Bellman error of `q`.
pub fn bellman_residual<M: BellmanModel>(m: &M, q: &QTable, gamma: f64) -> f64 {
    let v = state_values(m, q);
    let mut worst = 0.0_f64;
    for s in (0..m.num_states()).filter(|&s| !m.is_terminal(s)) {
        for a in (0..m.num_actions()).filter(|&a| m.has_row(s, a)) {
            worst = worst.max((q.get(s, a) - backup(m, &v, gamma, s, a)).abs());
        }
    }
    worst
}

/// Optimal values of an MDP. Acyclic MDPs are solved by backward induction
/// in reverse topological order (exact for any γ ≤ 1); otherwise Howard
/// policy iteration with dense linear policy evaluation, which needs γ < 1.
pub fn policy_iteration(mdp: &TabularMdp, gamma: f64) -> Result<OptimalSolution> {
    if let Some(order) = mdp.topological_order() {
        return Ok(backward_induction(mdp, gamma, &order));
    }
    policy_iteration_traced(mdp, gamma, |_| {})
}

fn backward_induction(mdp: &TabularMdp, gamma: f64, order: &[State]) -> OptimalSolution {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut q = QTable::new(ns, na, 0.0);
    let mut v = vec![0.0; ns];
    for &s in order.iter().rev() {
        if mdp.is_terminal(s) {
            continue;
        }
        for a in 0..na {
            q.set(s, a, backup(mdp, &v, gamma, s, a));
        }
        v[s] = q.max(s);
    }
    let residual = bellman_residual(mdp, &q, gamma);
    OptimalSolution { q, v, iterations: 1, residual }
}

/// Howard policy iteration; `on_iteration` sees the value of each evaluated
/// policy in turn.
pub fn policy_iteration_traced(
    mdp: &TabularMdp,
    gamma: f64,
    mut on_iteration: impl FnMut(&[f64]),
) -> Result<OptimalSolution> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    // Immediate-reward greedy start.
    let mut policy: Vec<Action> =
        (0..ns).map(|s| argmax_prefer(&(0..na).map(|a| mdp.reward(s, a)).collect::<Vec<_>>(), 0)).collect();
    let mut q = QTable::new(ns, na, 0.0);
    for iteration in 1..=PI_MAX_ITERATIONS {
        let v = evaluate_policy(mdp, &policy, gamma)?;
        on_iteration(&v);
        bellman_q(mdp, &v, gamma, &mut q);
        let mut stable = true;
        for s in (0..ns).filter(|&s| !mdp.is_terminal(s)) {
            let best = argmax_prefer(q.row(s), policy[s]);
            if best != policy[s] {
                policy[s] = best;
                stable = false;
            }
        }
        if stable {
            let v = state_values(mdp, &q);
            let residual = bellman_residual(mdp, &q, gamma);
            return Ok(OptimalSolution { q, v, iterations: iteration, residual });
        }
    }
    Err(Error::NoConvergence {
        solver: "policy iteration",
        iterations: PI_MAX_ITERATIONS,
        residual: bellman_residual(mdp, &q, gamma),
    })
}

/// Index of the maximum; `keep` wins ties (and near-ties) so the policy
/// does not cycle between equivalent actions.
fn argmax_prefer(row: &[f64], keep: usize) -> usize {
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * best.abs().max(1.0);
    if row[keep] >= best - tol {
        return keep;
    }
    row.iter().position(|&x| x == best).unwrap_or(0)
}

/// Solves `(I − γ P_π) V = R_π` over non-terminal states.
fn evaluate_policy(mdp: &TabularMdp, policy: &[Action], gamma: f64) -> Result<Vec<f64>> {
    let ns = mdp.num_states();
    let live: Vec<State> = (0..ns).filter(|&s| !mdp.is_terminal(s)).collect();
    let mut index = vec![usize::MAX; ns];
    for (i, &s) in live.iter().enumerate() {
        index[s] = i;
    }
    let n = live.len();
    let mut a_mat = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (i, &s) in live.iter().enumerate() {
        let a = policy[s];
        b[i] = mdp.reward(s, a);
        let (succ, prob) = mdp.row(s, a);
        for (&next, &p) in succ.iter().zip(prob) {
            if index[next] != usize::MAX {
                a_mat[(i, index[next])] -= gamma * p;
            }
        }
    }
    let x =
        a_mat.lu().solve(&b).ok_or_else(|| Error::DegenerateChain("policy evaluation matrix is singular".into()))?;
    let mut v = vec![0.0; ns];
    for (i, &s) in live.iter().enumerate() {
        v[s] = x[i];
    }
    Ok(v)
}

/// Synchronous value iteration from `start` (or zeros on modelled pairs).
///
/// Stops once the guaranteed distance to the fixed point is at most `tol`:
/// for γ < 1 that is when the last sweep moved no entry by more than
/// `tol (1 − γ) / γ`; for γ = 1 when it moved no entry by more than `tol`
/// (exactly zero on acyclic models after depth-many sweeps).
pub fn value_iteration<M: BellmanModel>(m: &M, gamma: f64, tol: f64, start: QTable) -> Result<(QTable, usize)> {
    let stop = if gamma < 1.0 { tol * (1.0 - gamma) / gamma.max(f64::MIN_POSITIVE) } else { tol };
    let mut q = start;
    let mut next = q.clone();
    for iteration in 1..=VI_MAX_ITERATIONS {
        let v = state_values(m, &q);
        bellman_q(m, &v, gamma, &mut next);
        let change = q.max_abs_diff(&next);
        std::mem::swap(&mut q, &mut next);
        if change <= stop {
            return Ok((q, iteration));
        }
    }
    Err(Error::NoConvergence {
        solver: "value iteration",
        iterations: VI_MAX_ITERATIONS,
        residual: bellman_residual(m, &q, gamma),
    })
}

/// Value iteration on a true MDP from the zero table.
pub fn solve_by_value_iteration(mdp: &TabularMdp, gamma: f64, tol: f64) -> Result<QTable> {
    let start = QTable::new(mdp.num_states(), mdp.num_actions(), 0.0);
    value_iteration(mdp, gamma, tol, start).map(|(q, _)| q)
}

//! Ground-truth solvers used to score learners.

mod rate;
mod solve;

pub use rate::{
    expected_reward_rate, simulate_reward_rate, stationary_distribution, Policy, RateBaselines, RateEstimate,
};
pub use solve::{
    bellman_residual, policy_iteration, policy_iteration_traced, solve_by_value_iteration, value_iteration,
    BellmanModel, EmpiricalSnapshot, OptimalSolution,
};

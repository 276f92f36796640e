mod common;

use common::invariants::*;

#[test]
fn small_backups() {
    small_backups_stay_consistent().unwrap();
}

#[test]
fn value_coherence() {
    sweeping_agents_keep_values_coherent().unwrap();
}

#[test]
fn episodic_monotonicity() {
    episodic_control_only_raises_values().unwrap();
}

#[test]
fn window_accounting() {
    windows_account_for_every_step().unwrap();
}

#[test]
fn epsilon_greedy() {
    epsilon_greedy_frequencies().unwrap();
}

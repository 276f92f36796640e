//! Randomized invariant checks shared by the core tests and the acceptance
//! suite. Each property runs a fixed-seed batch of [`CASES`] cases.

use std::collections::HashMap;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};

use sweep_core::agents::{
    ec_update, select_action, EpsilonMode, Explorer, ModelMode, QTable, ResetQueue, Sweeper, SweepingWithReset,
};
use sweep_core::harness::simulate_run;
use sweep_core::oracle::Policy;
use sweep_core::{
    Agent, AgentConfig, Algorithm, EnvSpec, MazeSpec, RewardMode, RngStream, State, TabularMdp, TmdpSpec, Transition,
};

pub const CASES: u32 = 1000;

pub type Outcome = Result<(), String>;

pub type Property = fn() -> Outcome;

pub const PROPERTIES: [(&str, Property); 5] = [
    ("small-backup consistency", small_backups_stay_consistent),
    ("V-coherence", sweeping_agents_keep_values_coherent),
    ("EC monotonicity", episodic_control_only_raises_values),
    ("window accounting", windows_account_for_every_step),
    ("epsilon-greedy frequencies", epsilon_greedy_frequencies),
];

fn check<S>(seed: u64, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config =
        Config { cases: CASES, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() };
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}

fn env(kind: u8, seed: u64) -> TabularMdp {
    let spec = match kind % 4 {
        0 => EnvSpec::Tmdp(TmdpSpec::deterministic(3, 3, RewardMode::Intermittent)),
        1 => EnvSpec::Tmdp(TmdpSpec::stochastic(2, 3, 3, RewardMode::Intermittent)),
        2 => EnvSpec::Tmdp(TmdpSpec::stochastic(3, 3, 2, RewardMode::TerminalOnly)),
        _ => EnvSpec::Maze(MazeSpec { width: 4, height: 3, wall_density: 0.3, goal: None }),
    };
    spec.sample(&mut RngStream::new(seed)).unwrap().mdp
}

/// Raw counts of everything observed at one pair.
#[derive(Default)]
struct PairLog {
    visits: f64,
    reward: f64,
    next: HashMap<State, f64>,
}

pub fn small_backups_stay_consistent() -> Outcome {
    let strategy =
        (0u8..4, any::<u64>(), prop::sample::select(vec![0.9, 0.99, 1.0]), prop::collection::vec(0usize..5, 150));
    check(11, strategy, |(kind, seed, gamma, budgets)| {
        let mdp = env(kind, seed);
        let mut rng = RngStream::new(seed).child(1);
        let mut sw = Sweeper::new(mdp.num_states(), mdp.num_actions(), gamma, 0.0, ModelMode::Counting);
        let mut log: HashMap<(State, usize), PairLog> = HashMap::new();
        let mut s = mdp.reset(&mut rng);
        for budget in budgets {
            let a = rng.below(mdp.num_actions());
            let t = mdp.step(s, a, &mut rng);
            sw.observe(&t, true);
            sw.plan(budget);
            let e = log.entry((t.state, t.action)).or_default();
            e.visits += 1.0;
            e.reward += t.reward;
            *e.next.entry(t.next_state).or_default() += 1.0;
            s = if t.terminal { mdp.reset(&mut rng) } else { t.next_state };

            for (&(ps, pa), e) in &log {
                let bootstrap: f64 = e.next.iter().map(|(&n, &c)| c / e.visits * sw.u[n]).sum();
                let expected = e.reward / e.visits + gamma * bootstrap;
                prop_assert!((sw.q.get(ps, pa) - expected).abs() <= 1e-9, "pair ({ps}, {pa})");
            }
            for x in 0..mdp.num_states() {
                if mdp.is_terminal(x) {
                    prop_assert_eq!(sw.u[x], 0.0);
                } else {
                    prop_assert_eq!(sw.v[x], sw.q.max(x));
                }
            }
        }
        Ok(())
    })
}

pub fn sweeping_agents_keep_values_coherent() -> Outcome {
    check(12, (0u8..4, any::<u64>(), 0u8..4, 20usize..200), |(kind, seed, variant, steps)| {
        let mdp = env(kind, seed);
        let cfg = match variant {
            0 => AgentConfig::new("r", Algorithm::PrioritizedSweepingReset),
            1 => AgentConfig::new("r", Algorithm::PrioritizedSweepingReset).reset_queue(ResetQueue::Visited),
            2 => AgentConfig::new("r", Algorithm::PrioritizedSweepingReset).q0(2.0),
            _ => AgentConfig::new("r", Algorithm::PrioritizedSweepingReset).reset_queue(ResetQueue::Visited).q0(2.0),
        };
        let gamma = if kind == 3 { 0.95 } else { 1.0 };
        let mut agent = SweepingWithReset::with_queue(
            Sweeper::new(mdp.num_states(), mdp.num_actions(), gamma, cfg.q0, ModelMode::Counting),
            Explorer::new(mdp.num_states(), mdp.num_actions(), 0.1, EpsilonMode::NonGreedy, cfg.novelty_enabled()),
            cfg.reset_queue.unwrap_or_default(),
        );
        let mut rng = RngStream::new(seed).child(2);
        let mut s = mdp.reset(&mut rng);
        let mut len = 0;
        for _ in 0..steps {
            let a = agent.select(s, &mut rng);
            let t = mdp.step(s, a, &mut rng);
            agent.observe(&t);
            len += 1;
            if t.terminal || len == 8 {
                agent.end_episode();
                prop_assert_eq!(agent.sweeper.model.visited_pairs().count(), 0);
                prop_assert!(agent.sweeper.queue.is_empty());
                len = 0;
                s = mdp.reset(&mut rng);
            } else {
                s = t.next_state;
            }
            let sw = &agent.sweeper;
            for x in 0..mdp.num_states() {
                if !sw.terminal_flags()[x] {
                    prop_assert_eq!(sw.v[x], sw.q.max(x));
                }
            }
        }
        Ok(())
    })
}

pub fn episodic_control_only_raises_values() -> Outcome {
    let strategy = (any::<u64>(), prop::sample::select(vec![0.5, 0.9, 1.0]), 1usize..12);
    check(13, strategy, |(seed, gamma, episodes)| {
        let spec = TmdpSpec::deterministic(3, 4, RewardMode::Intermittent).quantized(8);
        let mdp = EnvSpec::Tmdp(spec).sample(&mut RngStream::new(seed)).unwrap().mdp;
        let mut rng = RngStream::new(seed).child(3);
        let mut q = QTable::new(mdp.num_states(), mdp.num_actions(), 0.0);
        let mut best: HashMap<(State, usize), f64> = HashMap::new();
        for _ in 0..episodes {
            let mut episode: Vec<Transition> = Vec::new();
            let mut s = mdp.reset(&mut rng);
            loop {
                let t = mdp.step(s, rng.below(mdp.num_actions()), &mut rng);
                episode.push(t);
                if t.terminal {
                    break;
                }
                s = t.next_state;
            }
            let before = q.clone();
            ec_update(&mut q, &episode, gamma);
            for (i, t) in episode.iter().enumerate() {
                let mut g = 0.0;
                for later in episode[i..].iter().rev() {
                    g = later.reward + gamma * g;
                }
                let slot = best.entry((t.state, t.action)).or_insert(f64::NEG_INFINITY);
                *slot = slot.max(g);
            }
            for (x, (&new, &old)) in q.as_slice().iter().zip(before.as_slice()).enumerate() {
                prop_assert!(new >= old, "entry {x} dropped from {old} to {new}");
            }
            for s in 0..mdp.num_states() {
                for a in 0..mdp.num_actions() {
                    let expected = best.get(&(s, a)).map_or(0.0, |g| g.max(0.0));
                    prop_assert!((q.get(s, a) - expected).abs() <= 1e-12);
                }
            }
        }
        Ok(())
    })
}

/// Uniform random behaviour that logs every call it receives.
struct Recorder {
    q: QTable,
    log: Vec<Transition>,
    episode_ends: usize,
}

impl Agent for Recorder {
    fn select(&mut self, _s: State, rng: &mut RngStream) -> usize {
        rng.below(self.q.num_actions())
    }

    fn observe(&mut self, t: &Transition) {
        self.log.push(*t);
    }

    fn end_episode(&mut self) {
        self.episode_ends += 1;
    }

    fn q(&self) -> &QTable {
        &self.q
    }
}

pub fn windows_account_for_every_step() -> Outcome {
    let strategy = (0u8..4, any::<u64>(), 1usize..40, 1usize..12, prop::option::of(1usize..10));
    check(14, strategy, |(kind, seed, window, windows, cap)| {
        let mdp = if kind == 0 {
            let spec = TmdpSpec::deterministic(2, 3, RewardMode::Intermittent).quantized(10);
            EnvSpec::Tmdp(spec).sample(&mut RngStream::new(seed)).unwrap().mdp
        } else {
            env(kind, seed)
        };
        let mut agent =
            Recorder { q: QTable::new(mdp.num_states(), mdp.num_actions(), 0.0), log: Vec::new(), episode_ends: 0 };
        let steps = window * windows;
        let trace = simulate_run(&mdp, &mut agent, steps, window, cap, &mut RngStream::new(seed).child(4));
        prop_assert_eq!(agent.log.len(), steps);
        prop_assert_eq!(trace.window_sums.len(), windows);
        for (w, chunk) in agent.log.chunks(window).enumerate() {
            let sum: f64 = chunk.iter().map(|t| t.reward).sum();
            if kind == 0 {
                prop_assert_eq!(trace.window_sums[w], sum);
            } else {
                prop_assert!((trace.window_sums[w] - sum).abs() <= 1e-12);
            }
        }
        let mut ends = 0;
        let mut len = 0;
        for (k, t) in agent.log.iter().enumerate() {
            prop_assert_eq!(t.reward, mdp.reward(t.state, t.action));
            len += 1;
            if t.terminal || cap.is_some_and(|c| len >= c) {
                ends += 1;
                len = 0;
            } else if let Some(next) = agent.log.get(k + 1) {
                prop_assert_eq!(next.state, t.next_state);
            }
        }
        prop_assert_eq!(ends, agent.episode_ends);
        prop_assert_eq!(ends, trace.episodes);
        Ok(())
    })
}

pub fn epsilon_greedy_frequencies() -> Outcome {
    let strategy = (
        prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0]), 2..6),
        any::<u8>(),
        any::<bool>(),
        0.0f64..=1.0,
        any::<bool>(),
        any::<u64>(),
    );
    check(15, strategy, |(row, untried_bits, use_untried, epsilon, all_actions, seed)| {
        let n = row.len();
        let mode = if all_actions { EpsilonMode::AllActions } else { EpsilonMode::NonGreedy };
        let untried: Vec<bool> = (0..n).map(|a| use_untried && untried_bits >> a & 1 == 1).collect();
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let greedy: Vec<bool> = row.iter().map(|&q| q == best).collect();
        let n_greedy = greedy.iter().filter(|&&g| g).count();
        let n_untried = untried.iter().filter(|&&u| u).count();

        let expected: Vec<f64> = (0..n)
            .map(|a| {
                let exploit = if n_untried > 0 {
                    if untried[a] {
                        1.0 / n_untried as f64
                    } else {
                        0.0
                    }
                } else if greedy[a] {
                    1.0 / n_greedy as f64
                } else {
                    0.0
                };
                let explore = match mode {
                    EpsilonMode::AllActions => 1.0 / n as f64,
                    EpsilonMode::NonGreedy if n_greedy == n => 1.0 / n as f64,
                    EpsilonMode::NonGreedy if greedy[a] => 0.0,
                    EpsilonMode::NonGreedy => 1.0 / (n - n_greedy) as f64,
                };
                (1.0 - epsilon) * exploit + epsilon * explore
            })
            .collect();

        if n_untried == 0 {
            let q = QTable::from_values(n, 0.0, row.clone());
            let policy = Policy::epsilon_greedy(&q, epsilon, mode, 0.0);
            for (p, e) in policy.row(0).iter().zip(&expected) {
                prop_assert!((p - e).abs() <= 1e-12);
            }
        }

        let draws = 4000;
        let mut counts = vec![0usize; n];
        let mut rng = RngStream::new(seed);
        let mask = (n_untried > 0).then_some(untried.as_slice());
        for _ in 0..draws {
            counts[select_action(&row, epsilon, mode, mask, &mut rng).action] += 1;
        }
        for a in 0..n {
            let p = expected[a];
            let freq = counts[a] as f64 / draws as f64;
            let tol = 5.5 * (p * (1.0 - p) / draws as f64).sqrt() + 1e-12;
            prop_assert!((freq - p).abs() <= tol, "action {a}: {freq} vs {p}");
        }
        Ok(())
    })
}

//! ε-greedy action selection with an optional preference for untried actions.

use serde::{Deserialize, Serialize};

use crate::mdp::{Action, State};
use crate::rng::RngStream;

use super::QTable;

/// How the ε branch picks its action.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    /// ε is the probability of a non-greedy action, uniform over the
    /// non-maximizers.
    #[default]
    NonGreedy,
    /// ε is the probability of a uniformly random action (greedy included).
    AllActions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Selection {
    pub action: Action,
    /// Whether `action` maximizes the row at selection time.
    pub greedy: bool,
}

/// Picks uniformly the `k`-th element of `row` satisfying `pred`.
#[inline]
fn nth_matching(row: &[f64], k: usize, pred: impl Fn(usize, f64) -> bool) -> usize {
    row.iter().enumerate().filter(|&(a, &q)| pred(a, q)).nth(k).map(|(a, _)| a).expect("k below match count")
}

/// One ε-greedy draw over `row`.
///
/// With probability `1 - ε` the action is greedy (ties uniform) or, when
/// `untried` is given and some action at this state has never been chosen,
/// uniform over the untried actions. With probability `ε` it is uniform
/// over the non-greedy actions (all actions if every action is greedy).
pub fn select_action(
    row: &[f64],
    epsilon: f64,
    mode: EpsilonMode,
    untried: Option<&[bool]>,
    rng: &mut RngStream,
) -> Selection {
    let n = row.len();
    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_greedy = row.iter().filter(|&&q| q == best).count();
    let explore = epsilon > 0.0 && rng.next_f64() < epsilon;

    let action = if explore {
        match mode {
            EpsilonMode::AllActions => rng.below(n),
            EpsilonMode::NonGreedy if n_greedy == n => rng.below(n),
            EpsilonMode::NonGreedy => {
                let k = rng.below(n - n_greedy);
                nth_matching(row, k, |_, q| q != best)
            }
        }
    } else {
        let n_novel = untried.map_or(0, |u| u.iter().filter(|&&x| x).count());
        if n_novel > 0 {
            let u = untried.unwrap();
            let k = rng.below(n_novel);
            nth_matching(row, k, |a, _| u[a])
        } else {
            let k = rng.below(n_greedy);
            nth_matching(row, k, |_, q| q == best)
        }
    };
    Selection { action, greedy: row[action] == best }
}

/// Selection settings plus the per-pair "never chosen" flags.
#[derive(Clone, Debug)]
pub struct Explorer {
    pub epsilon: f64,
    pub mode: EpsilonMode,
    num_actions: usize,
    untried: Option<Vec<bool>>,
}

impl Explorer {
    pub fn new(num_states: usize, num_actions: usize, epsilon: f64, mode: EpsilonMode, prefer_novel: bool) -> Self {
        Explorer { epsilon, mode, num_actions, untried: prefer_novel.then(|| vec![true; num_states * num_actions]) }
    }

    pub fn select(&mut self, q: &QTable, s: State, rng: &mut RngStream) -> Selection {
        let range = s * self.num_actions..(s + 1) * self.num_actions;
        let untried = self.untried.as_ref().map(|u| &u[range.clone()]);
        let sel = select_action(q.row(s), self.epsilon, self.mode, untried, rng);
        if let Some(u) = self.untried.as_mut() {
            u[range.start + sel.action] = false;
        }
        sel
    }
}

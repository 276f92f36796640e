use rayon::prelude::*;

use crate::agents::{Agent, EpsilonMode};
use crate::envgen::Instance;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::oracle::{policy_iteration, RateBaselines};
use crate::rng::RngStream;

use super::{aggregate, ExperimentConfig, Summary};

/// One window of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub algorithm: String,
    pub env: usize,
    pub run: usize,
    pub window: usize,
    pub step_end: usize,
    pub reward_rate: f64,
    pub normalized_rate: f64,
}

pub const CURVES_HEADER: &str = "# sweep curves v1\nalgorithm,env,run,window,step_end,reward_rate,normalized_rate\n";

/// Reward collected by one simulated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    /// Summed reward per window of `T` consecutive steps.
    pub window_sums: Vec<f64>,
    pub total_reward: f64,
    pub episodes: usize,
}

/// Drives `agent` for `steps` steps. Windows run across episode boundaries;
/// an episode ends at a terminal state or after `episode_cap` steps.
pub fn simulate_run(
    mdp: &TabularMdp,
    agent: &mut dyn Agent,
    steps: usize,
    window: usize,
    episode_cap: Option<usize>,
    rng: &mut RngStream,
) -> RunTrace {
    let cap = episode_cap.unwrap_or(usize::MAX);
    let mut trace = RunTrace { window_sums: Vec::with_capacity(steps / window), total_reward: 0.0, episodes: 0 };
    let mut s = mdp.reset(rng);
    agent.start_episode(s);
    let mut episode_len = 0;
    let mut acc = 0.0;
    for step in 1..=steps {
        let a = agent.select(s, rng);
        let t = mdp.step(s, a, rng);
        acc += t.reward;
        trace.total_reward += t.reward;
        agent.observe(&t);
        agent.plan();
        episode_len += 1;
        if t.terminal || episode_len >= cap {
            agent.end_episode();
            trace.episodes += 1;
            episode_len = 0;
            s = mdp.reset(rng);
            agent.start_episode(s);
        } else {
            s = t.next_state;
        }
        if step % window == 0 {
            trace.window_sums.push(acc);
            acc = 0.0;
        }
    }
    trace
}

/// A sampled environment with its optimal values and normalization rates.
#[derive(Clone, Debug)]
pub struct PreparedEnv {
    pub instance: Instance,
    pub baselines: RateBaselines,
}

pub fn prepare_env(cfg: &ExperimentConfig, rng: &mut RngStream) -> Result<PreparedEnv> {
    let instance = cfg.env.sample(rng)?;
    let solution = policy_iteration(&instance.mdp, cfg.gamma)?;
    let baselines = RateBaselines::compute(&instance.mdp, &solution.q, cfg.epsilon, EpsilonMode::NonGreedy)?;
    Ok(PreparedEnv { instance, baselines })
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Rows in task order: environment, then agent, then run.
    pub rows: Vec<CurveRow>,
    pub baselines: Vec<Option<RateBaselines>>,
    /// Environments dropped because their oracle failed, with the reason.
    pub skipped: Vec<(usize, String)>,
}

impl ExperimentResult {
    pub fn summary(&self) -> Summary {
        aggregate(&self.rows, self.config.window)
    }

    pub fn curves_csv(&self) -> String {
        write_curves(&self.rows)
    }
}

pub fn write_curves(rows: &[CurveRow]) -> String {
    let mut out = String::from(CURVES_HEADER);
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.algorithm, r.env, r.run, r.window, r.step_end, r.reward_rate, r.normalized_rate
        ));
    }
    out
}

/// Runs every (environment, agent, run) task on a pool of `workers` threads
/// (0 picks the machine default).
///
/// Streams: environment `i` is built from `master.child(i)` for every `i`
/// first; task streams follow as further children of the master stream in
/// (environment, agent, run) loop order, labelled `N + task index`.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let n = cfg.env_samples;
    let mut master = RngStream::new(cfg.seed);
    let env_streams: Vec<RngStream> = (0..n).map(|i| master.child(i as u64)).collect();
    let mut tasks = Vec::with_capacity(n * cfg.agents.len() * cfg.runs_per_env);
    for env in 0..n {
        for agent in 0..cfg.agents.len() {
            for run in 0..cfg.runs_per_env {
                let label = (n + tasks.len()) as u64;
                tasks.push((env, agent, run, master.child(label)));
            }
        }
    }

    pool.install(|| {
        let envs: Vec<Result<PreparedEnv>> =
            env_streams.into_par_iter().map(|mut stream| prepare_env(cfg, &mut stream)).collect();
        let mut skipped = Vec::new();
        for (i, env) in envs.iter().enumerate() {
            if let Err(e) = env {
                log::warn!("environment {i} skipped: {e}");
                skipped.push((i, e.to_string()));
            }
        }
        let runs: Vec<Option<Result<Vec<CurveRow>>>> = tasks
            .into_par_iter()
            .map(|(env, agent, run, mut stream)| {
                let prepared = envs[env].as_ref().ok()?;
                Some(run_task(cfg, prepared, (env, agent, run), &mut stream))
            })
            .collect();
        let mut rows = Vec::new();
        for r in runs.into_iter().flatten() {
            rows.extend(r?);
        }
        let baselines = envs.iter().map(|e| e.as_ref().ok().map(|p| p.baselines)).collect();
        Ok(ExperimentResult { config: cfg.clone(), rows, baselines, skipped })
    })
}

fn run_task(
    cfg: &ExperimentConfig,
    env: &PreparedEnv,
    (env_index, agent_index, run): (usize, usize, usize),
    rng: &mut RngStream,
) -> Result<Vec<CurveRow>> {
    let mdp = &env.instance.mdp;
    let agent_cfg = &cfg.agents[agent_index];
    let mut agent = agent_cfg.build(mdp.num_states(), mdp.num_actions(), cfg.gamma, cfg.epsilon)?;
    let trace = simulate_run(mdp, agent.as_mut(), cfg.steps_per_run, cfg.window, cfg.episode_cap, rng);
    trace
        .window_sums
        .iter()
        .enumerate()
        .map(|(w, &sum)| {
            let reward_rate = sum / cfg.window as f64;
            Ok(CurveRow {
                algorithm: agent_cfg.id.clone(),
                env: env_index,
                run,
                window: w,
                step_end: (w + 1) * cfg.window,
                reward_rate,
                normalized_rate: env.baselines.normalize(reward_rate)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentConfig, Algorithm};
    use crate::harness::preset;

    fn tiny() -> ExperimentConfig {
        let mut cfg = preset("fig1a").unwrap();
        cfg.env_samples = 2;
        cfg.runs_per_env = 2;
        cfg.steps_per_run = 400;
        cfg.window = 100;
        cfg
    }

    #[test]
    fn rows_follow_task_order() {
        let cfg = tiny();
        let result = run_experiment(&cfg, 1).unwrap();
        assert_eq!(result.rows.len(), 2 * 9 * 2 * 4);
        assert_eq!(result.rows[0].algorithm, "ec");
        assert_eq!(result.rows[4].run, 1);
        assert_eq!(result.rows[8].algorithm, "ps");
        assert_eq!(result.rows.last().unwrap().env, 1);
        assert!(result.skipped.is_empty());
    }

    #[test]
    fn worker_count_does_not_matter() {
        let cfg = tiny();
        let one = run_experiment(&cfg, 1).unwrap().curves_csv();
        let three = run_experiment(&cfg, 3).unwrap().curves_csv();
        assert_eq!(one, three);
        assert!(one.starts_with(CURVES_HEADER));
    }

    #[test]
    fn episode_cap_restarts() {
        let mut cfg = preset("fig3b").unwrap();
        cfg.env = crate::envgen::EnvSpec::Maze(crate::envgen::MazeSpec { width: 6, height: 6, ..Default::default() });
        let env = prepare_env(&cfg, &mut RngStream::new(3)).unwrap();
        let mut agent = AgentConfig::new("ql", Algorithm::QLearning).alpha(0.5).build(36, 4, 0.99, 0.1).unwrap();
        let trace = simulate_run(&env.instance.mdp, agent.as_mut(), 100, 10, Some(3), &mut RngStream::new(4));
        assert!(trace.episodes >= 33);
        assert_eq!(trace.window_sums.len(), 10);
    }
}

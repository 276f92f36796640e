use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sweep_core::agents::EpsilonMode;
use sweep_core::harness::{self, emit_plot_script, ExperimentConfig, Summary, PLOT_FILE};
use sweep_core::oracle::{policy_iteration, simulate_reward_rate, solve_by_value_iteration, Policy, RateBaselines};
use sweep_core::verify::{self, EquivalenceConfig};
use sweep_core::{EnvSpec, RewardMode, RngStream, TabularMdp, TmdpSpec};

#[derive(Parser)]
#[command(name = "sweep", version, about = "Prioritized sweeping and episodic control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write curves, summary and plot script.
    Run(RunArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
    /// Solve an environment exactly and report its normalization rates.
    Oracle(OracleArgs),
    /// Write a plot script for a summary file.
    Plot(PlotArgs),
    /// Sample an environment and write it as JSON.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// One of fig1a, fig1b, fig2b, fig3b.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Experiment config in TOML.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Override the number of sampled environments.
    #[arg(long)]
    env_samples: Option<usize>,
    /// Override the number of runs per environment.
    #[arg(long)]
    runs_per_env: Option<usize>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Equivalence,
    Drain,
    EcBound,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    /// Instances (equivalence, drain) or trials (ec-bound) [default: 100, 50, 50].
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Behaviour traces per tree in the equivalence suite.
    #[arg(long, default_value_t = 10)]
    traces: usize,
    /// Episodes per trace [default: 50 for equivalence, 10 for ec-bound].
    #[arg(long)]
    episodes: Option<usize>,
    /// Steps per drain instance.
    #[arg(long, default_value_t = 500)]
    steps: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// An MDP in JSON (`.json`) or an environment spec in TOML (`.toml`).
    #[arg(long)]
    env: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Seed for sampling from a spec and for simulation.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also estimate both rates by simulating this many steps.
    #[arg(long)]
    simulate: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    summary: PathBuf,
    /// Script path [default: plot.gp next to the summary].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Environment spec in TOML.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Where to write the MDP JSON; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the maze layout.
    #[arg(long)]
    render: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Verify(args) => verify(args),
        Command::Oracle(args) => oracle(args),
        Command::Plot(args) => plot(args),
        Command::Generate(args) => generate(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(args: RunArgs) -> Result<bool> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), _) => harness::preset(name)?,
        (None, Some(path)) => ExperimentConfig::from_toml(&read(path)?)?,
        (None, None) => bail!("give --preset or --config"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(n) = args.env_samples {
        cfg.env_samples = n;
    }
    if let Some(m) = args.runs_per_env {
        cfg.runs_per_env = m;
    }
    cfg.validate()?;
    if args.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(true);
    }
    let started = Instant::now();
    log::info!(
        "running `{}`: {} envs × {} agents × {} runs, {} steps each",
        cfg.name,
        cfg.env_samples,
        cfg.agents.len(),
        cfg.runs_per_env,
        cfg.steps_per_run
    );
    let result = harness::run_experiment(&cfg, args.workers)?;
    let files = harness::write_outputs(&result, &cfg.output_dir)?;
    for (env, reason) in &result.skipped {
        println!("skipped env {env}: {reason}");
    }
    let summary = result.summary();
    println!("{:<24} {:>10} {:>10}", "algorithm", "final", "std_err");
    for c in &summary.curves {
        if let Some(p) = c.points.last() {
            println!("{:<24} {:>10.4} {:>10.4}", c.algorithm, p.mean, p.std_err);
        }
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    log::info!("finished in {:.1}s", started.elapsed().as_secs_f64());
    Ok(true)
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let mut passed = true;
    let wants = |s: Suite| args.suite == s || args.suite == Suite::All;
    let mut master = RngStream::new(args.seed);
    // Each suite draws from its own child stream so that running one alone
    // gives the same result as running it within `all`.
    let mut equivalence_rng = master.child(0);
    let mut drain_rng = master.child(1);
    let mut bound_rng = master.child(2);
    if wants(Suite::Equivalence) {
        let cfg = EquivalenceConfig {
            instances: args.trials.unwrap_or(100),
            traces: args.traces,
            episodes: args.episodes.unwrap_or(50),
            ..EquivalenceConfig::default()
        };
        let started = Instant::now();
        let report = verify::lockstep_equivalence(&cfg, &mut equivalence_rng)?;
        print!("{report}");
        println!("elapsed_s: {:.2}\n", started.elapsed().as_secs_f64());
        passed &= report.exact_equal;
    }
    if wants(Suite::Drain) {
        let started = Instant::now();
        let report = verify::drain_suite(args.trials.unwrap_or(50), args.steps, &mut drain_rng)?;
        print!("{report}");
        println!("elapsed_s: {:.2}\n", started.elapsed().as_secs_f64());
        passed &= report.passed();
    }
    if wants(Suite::EcBound) {
        let spec = TmdpSpec::deterministic(2, 5, RewardMode::Intermittent);
        let started = Instant::now();
        let report =
            verify::ec_bound_check(&spec, 5.0, args.episodes.unwrap_or(10), args.trials.unwrap_or(50), &mut bound_rng)?;
        print!("{report}");
        println!("elapsed_s: {:.2}\n", started.elapsed().as_secs_f64());
        passed &= report.passed();
    }
    println!("overall: {}", if passed { "PASS" } else { "FAIL" });
    Ok(passed)
}

fn load_env(path: &Path, seed: u64) -> Result<(TabularMdp, Option<EnvSpec>)> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        return Ok((TabularMdp::from_json(&text)?, None));
    }
    let spec: EnvSpec = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let instance = spec.sample(&mut RngStream::new(seed))?;
    Ok((instance.mdp, Some(spec)))
}

fn oracle(args: OracleArgs) -> Result<bool> {
    let (mdp, _) = load_env(&args.env, args.seed)?;
    let solution = policy_iteration(&mdp, args.gamma)?;
    let vi = solve_by_value_iteration(&mdp, args.gamma, 1e-11)?;
    println!("states: {}", mdp.num_states());
    println!("actions: {}", mdp.num_actions());
    println!("gamma: {}", args.gamma);
    println!("policy_iterations: {}", solution.iterations);
    println!("bellman_residual: {:e}", solution.residual);
    println!("value_iteration_gap: {:e}", solution.q.max_abs_diff(&vi));
    let v0: f64 = mdp.initial_states().iter().map(|&(s, p)| p * solution.v[s]).sum();
    println!("initial_value: {v0}");
    let baselines = RateBaselines::compute(&mdp, &solution.q, args.epsilon, EpsilonMode::NonGreedy)?;
    println!("r_uniform: {}", baselines.r_uniform);
    println!("r_opt: {}", baselines.r_opt);
    if let Some(steps) = args.simulate {
        let mut rng = RngStream::new(args.seed).child(1);
        let uniform = Policy::uniform(mdp.num_states(), mdp.num_actions());
        let tie_tol = 1e-9 * mdp.max_abs_reward().max(1.0);
        let opt = Policy::epsilon_greedy(&solution.q, args.epsilon, EpsilonMode::NonGreedy, tie_tol);
        for (name, policy) in [("uniform", &uniform), ("opt", &opt)] {
            let est = simulate_reward_rate(&mdp, policy, steps, &mut rng);
            println!("r_{name}_simulated: {} ± {}", est.mean, est.std_err);
        }
    }
    Ok(true)
}

fn plot(args: PlotArgs) -> Result<bool> {
    let summary = Summary::from_csv(&read(&args.summary)?)?;
    let dir = args.summary.parent().unwrap_or(Path::new("."));
    let out = args.out.unwrap_or_else(|| dir.join(PLOT_FILE));
    let csv = args.summary.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let title = args.title.unwrap_or_else(|| "normalized reward rate".into());
    fs::write(&out, emit_plot_script(&summary, &csv, &title)).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(true)
}

fn generate(args: GenerateArgs) -> Result<bool> {
    let text = read(&args.spec)?;
    let spec: EnvSpec = toml::from_str(&text).with_context(|| format!("parsing {}", args.spec.display()))?;
    let instance = spec.sample(&mut RngStream::new(args.seed))?;
    if args.render {
        match &instance.layout {
            Some(layout) => println!("{layout}"),
            None => bail!("--render needs a maze spec"),
        }
    }
    let json = instance.mdp.to_json();
    match args.out {
        Some(path) => fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
        None if !args.render => println!("{json}"),
        None => {}
    }
    Ok(true)
}

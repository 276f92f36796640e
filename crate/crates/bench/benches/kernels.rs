use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use sweep_core::agents::{MaxPriorityQueue, ModelMode, Sweeper};
use sweep_core::harness::simulate_run;
use sweep_core::{AgentConfig, Algorithm, EnvSpec, MazeSpec, RewardMode, RngStream, TabularMdp, TmdpSpec};

fn maze() -> TabularMdp {
    EnvSpec::Maze(MazeSpec::default()).sample(&mut RngStream::new(7)).unwrap().mdp
}

fn tree() -> TabularMdp {
    EnvSpec::Tmdp(TmdpSpec::deterministic(4, 5, RewardMode::TerminalOnly)).sample(&mut RngStream::new(7)).unwrap().mdp
}

/// A sweeper that has seen `steps` uniform-random transitions of `mdp`
/// without planning, so its queue is full of pending work.
fn loaded_sweeper(mdp: &TabularMdp, gamma: f64, steps: usize) -> Sweeper {
    let mut sw = Sweeper::new(mdp.num_states(), mdp.num_actions(), gamma, 0.0, ModelMode::Counting);
    let mut rng = RngStream::new(3);
    let mut s = mdp.reset(&mut rng);
    for _ in 0..steps {
        let t = mdp.step(s, rng.below(mdp.num_actions()), &mut rng);
        sw.observe(&t, true);
        s = if t.terminal { mdp.reset(&mut rng) } else { t.next_state };
    }
    sw
}

fn planning(c: &mut Criterion) {
    let mdp = maze();
    let sw = loaded_sweeper(&mdp, 0.99, 20_000);
    c.bench_function("plan/maze_drain", |b| {
        b.iter_batched(
            || sw.clone(),
            |mut sw| {
                let done = sw.plan(usize::MAX);
                (sw, done)
            },
            BatchSize::LargeInput,
        )
    });
    c.bench_function("plan/maze_3_backups", |b| {
        b.iter_batched(
            || sw.clone(),
            |mut sw| {
                let done = sw.plan(3);
                (sw, done)
            },
            BatchSize::LargeInput,
        )
    });
}

fn queue(c: &mut Criterion) {
    let n = 4096;
    let mut rng = RngStream::new(5);
    let ops: Vec<(usize, f64)> = (0..4 * n).map(|_| (rng.below(n), rng.next_f64())).collect();
    c.bench_function("queue/push_then_drain", |b| {
        let mut q = MaxPriorityQueue::new(n);
        b.iter(|| {
            for &(s, p) in &ops {
                q.push(s, p);
            }
            while let Some(top) = q.pop() {
                black_box(top);
            }
        })
    });
}

fn episodes(c: &mut Criterion) {
    let tree = tree();
    let maze = maze();
    let agents = [
        ("ec", AgentConfig::new("ec", Algorithm::EpisodicControl)),
        ("ps", AgentConfig::new("ps", Algorithm::PrioritizedSweeping).backups(3)),
        ("ps_reset", AgentConfig::new("ps_reset", Algorithm::PrioritizedSweepingReset)),
        ("q_learning", AgentConfig::new("q_learning", Algorithm::QLearning).alpha(1.0)),
    ];
    for (name, cfg) in &agents {
        c.bench_function(&format!("run/tree_6000/{name}"), |b| {
            b.iter(|| {
                let mut agent = cfg.build(tree.num_states(), tree.num_actions(), 1.0, 0.1).unwrap();
                black_box(simulate_run(&tree, agent.as_mut(), 6000, 200, None, &mut RngStream::new(1)))
            })
        });
        c.bench_function(&format!("run/maze_20000/{name}"), |b| {
            b.iter(|| {
                let mut agent = cfg.build(maze.num_states(), maze.num_actions(), 0.99, 0.1).unwrap();
                black_box(simulate_run(&maze, agent.as_mut(), 20_000, 10_000, Some(10_000), &mut RngStream::new(1)))
            })
        });
    }
}

criterion_group!(benches, planning, queue, episodes);
criterion_main!(benches);

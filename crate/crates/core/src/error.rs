use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {}", .0.join("; "))]
    InvalidMdp(Vec<String>),

    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),

    #[error("maze generation gave up after {attempts} attempts")]
    MazeGeneration { attempts: usize },

    #[error("{solver} did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence { solver: &'static str, iterations: usize, residual: f64 },

    #[error("reward-rate chain is not solvable: {0}")]
    DegenerateChain(String),

    #[error("degenerate baselines: optimal rate {r_opt} equals uniform rate {r_uniform}")]
    DegenerateBaselines { r_uniform: f64, r_opt: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

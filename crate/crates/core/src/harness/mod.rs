//! Experiment configuration, parallel simulation and result files.

mod config;
mod plot;
mod run;
mod summary;

pub use config::{preset, ExperimentConfig, PRESETS};
pub use plot::emit_plot_script;
pub use run::{
    prepare_env, run_experiment, simulate_run, write_curves, CurveRow, ExperimentResult, PreparedEnv, RunTrace,
    CURVES_HEADER,
};
pub use summary::{aggregate, AlgorithmCurve, CurvePoint, Summary, SUMMARY_HEADER, THIN_CURVES};

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "plot.gp";
pub const CONFIG_FILE: &str = "config.toml";

/// Writes curves, summary, plot script and the resolved config into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let summary = result.summary();
    let files = [
        (CURVES_FILE, result.curves_csv()),
        (SUMMARY_FILE, summary.to_csv()),
        (PLOT_FILE, emit_plot_script(&summary, SUMMARY_FILE, &result.config.name)),
        (CONFIG_FILE, result.config.to_toml()),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

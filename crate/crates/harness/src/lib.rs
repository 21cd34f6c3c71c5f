//! Multi-seed experiment runner: aggregation over seeds and CSV, JSON and
//! SVG output. The `modal-bandits` binary is a thin clap front end over
//! this crate and `modal-core`.

pub mod aggregate;
pub mod output;
pub mod runner;
pub mod svg;

pub use aggregate::{AggregateResult, Stat};
pub use output::write_outputs;
pub use runner::{checkpoints, run_experiment, BanditOutcome, ExperimentResult, SeedOutcome};

use std::path::{Path, PathBuf};

/// Environment variable that overrides the config's output directory.
pub const OUT_ENV: &str = "MODAL_BANDITS_OUT";

/// Output directory: the command-line flag, then [`OUT_ENV`], then the
/// config's `output_dir`, then `out/<name>`.
pub fn output_dir(flag: Option<&Path>, env: Option<&str>, config: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(e) = env.filter(|e| !e.is_empty()) {
        return PathBuf::from(e);
    }
    config.map_or_else(|| Path::new("out").join(name), Path::to_path_buf)
}

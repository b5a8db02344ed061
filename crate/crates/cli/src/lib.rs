//! `fkexit`: runs the named experiments from a TOML config and writes
//! self-describing CSV or JSON artifacts.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{Experiment, ExperimentConfig, Format, McConfig, OutputConfig, Target};
pub use error::CliError;
pub use experiments::run_experiment;
pub use output::{Cell, Table};

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config_hash: String,
    pub files: Vec<PathBuf>,
    pub tables: Vec<Table>,
}

/// Loads, applies the seed override and validates a config file.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::config(format!("cannot read {}: {e}", path.display()), "pass an existing TOML file to --config")
    })?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(s) = seed {
        cfg.mc.seed = s;
    }
    Ok(cfg)
}

/// Runs `cfg` and writes its artifacts under `out_dir`.
pub fn run(cfg: &ExperimentConfig, workers: usize, out_dir: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let tables = run_experiment(cfg, workers)?;
    let files = output::render(cfg, &tables, out_dir);
    output::write(&files)?;
    Ok(RunOutcome {
        config_hash: output::config_hash(cfg),
        files: files.into_iter().map(|(p, _)| p).collect(),
        tables,
    })
}

//! Experiment runner for qwalk-core: JSON configs in, CSV tables out.

// Verdicts use `!(err <= tol)` so that NaN errors fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;

use config::{Experiment, ExperimentConfig};
use experiments::Table;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("validation error: {0}")]
    Coin(#[from] qwalk::coin::CoinError),
    #[error("validation error: {0}")]
    Walk(#[from] qwalk::walker::WalkError),
    #[error("series error: {0}")]
    Series(#[from] qwalk::series::SeriesError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Theory,
    Compare,
    GenfunCheck,
    ScaledDist,
    TreeCheck,
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub t: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;

pub fn prepare(mut cfg: ExperimentConfig, cmd: Command, ov: &Overrides) -> Result<Experiment, HarnessError> {
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(t) = ov.t {
        cfg.t_max = t;
    }
    if let Some(tol) = ov.tolerance {
        if !(tol >= 0.0) {
            return Err(HarnessError::Validation(format!("tolerance must be nonnegative, got {tol}")));
        }
    }
    cfg.validate(cmd == Command::TreeCheck)
}

pub fn run(cmd: Command, exp: &Experiment, ov: &Overrides) -> Result<Table, HarnessError> {
    let t = exp.config.t_max;
    let tol = ov.tolerance;
    match cmd {
        Command::Simulate => experiments::run_simulate(exp, t),
        Command::Theory => experiments::run_theory(exp, t),
        Command::Compare => experiments::compare(exp, t, tol),
        Command::GenfunCheck => experiments::genfun_check(exp, t, tol),
        Command::ScaledDist => experiments::scaled_dist(exp, t, tol),
        Command::TreeCheck => experiments::tree_check(exp, t, tol),
    }
}

/// Loads, validates, runs and writes one config. Returns the exit code.
pub fn run_file(cmd: Command, config: &Path, out: Option<&Path>, ov: &Overrides) -> Result<i32, HarnessError> {
    run_one(cmd, config, out, ov, true)
}

fn run_one(cmd: Command, config: &Path, out: Option<&Path>, ov: &Overrides, stdout_ok: bool) -> Result<i32, HarnessError> {
    let cfg = ExperimentConfig::load(config)?;
    let out: Option<PathBuf> = out.map(Path::to_path_buf).or_else(|| cfg.output.clone());
    if out.is_none() && !stdout_ok {
        return Err(HarnessError::Validation(format!("{}: several configs need an \"output\" path each", config.display())));
    }
    let exp = prepare(cfg, cmd, ov)?;
    let table = run(cmd, &exp, ov)?;
    match out {
        Some(p) => {
            let f = std::fs::File::create(&p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
            table.write(std::io::BufWriter::new(f))?;
        }
        None => table.write(std::io::stdout().lock())?,
    }
    Ok(if table.failed { EXIT_TOLERANCE } else { EXIT_OK })
}

/// Runs several configs concurrently; results come back in input order.
pub fn run_files(cmd: Command, configs: &[PathBuf], out: Option<&Path>, ov: &Overrides) -> Vec<Result<i32, HarnessError>> {
    if configs.len() > 1 && out.is_some() {
        return vec![Err(HarnessError::Validation("--out needs a single --config; set \"output\" in each config instead".into()))];
    }
    let single = configs.len() == 1;
    configs.par_iter().map(|c| run_one(cmd, c, out, ov, single)).collect()
}

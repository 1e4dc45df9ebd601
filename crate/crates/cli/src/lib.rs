//! Scenario runner: reads a JSON scenario, dispatches a subcommand and
//! writes `report.json` with CSV side files.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::PathBuf;

pub use error::{CliError, Result};

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
}

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_FAILED: u8 = 2;

/// Loads, overrides and runs one scenario.
pub fn run_file(command: &str, config: &std::path::Path, overrides: &Overrides) -> Result<(run::Outcome, PathBuf)> {
    let mut scn = config::load(config)?;
    if let Some(seed) = overrides.seed {
        scn.seed = seed;
    }
    if let Some(n) = overrides.resolution {
        scn.discretization.n = n;
    }
    let dir = overrides
        .out_dir
        .clone()
        .or_else(|| scn.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    // Validate before touching the file system.
    scn.validate(command)?;
    let mut writer = output::Writer::new(&dir)?;
    let outcome = run::execute(command, &scn, &mut writer)?;
    Ok((outcome, dir))
}

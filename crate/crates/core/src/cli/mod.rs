//! Batch experiments driven by a config file.
//!
//! Each [`Command`] reads an [`ExperimentConfig`], runs one analysis and
//! writes CSV/JSON artifacts into the output directory. Exit codes: 0 for
//! success, 2 for an analysis-negative result (not certified, not
//! converged), 1 for errors.

mod commands;
pub mod config;
pub mod output;
mod sweep;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;
pub use sweep::{SweepRow, WORKERS_ENV};

use crate::error::Result;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Certify,
    Drive,
    EspTest,
    FmpTest,
    Capacity,
    Ipc,
    Lyapunov,
    Sweep,
    Approx,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Certify,
        Command::Drive,
        Command::EspTest,
        Command::FmpTest,
        Command::Capacity,
        Command::Ipc,
        Command::Lyapunov,
        Command::Sweep,
        Command::Approx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Drive => "drive",
            Command::EspTest => "esp-test",
            Command::FmpTest => "fmp-test",
            Command::Capacity => "capacity",
            Command::Ipc => "ipc",
            Command::Lyapunov => "lyapunov",
            Command::Sweep => "sweep",
            Command::Approx => "approx",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Command-line overrides; nothing else can be set outside the file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = Some(d.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    /// One-line human summary.
    pub summary: String,
}

pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir)?;
    match cmd {
        Command::Certify => commands::certify(cfg, &dir),
        Command::Drive => commands::drive(cfg, &dir),
        Command::EspTest => commands::esp_test(cfg, &dir),
        Command::FmpTest => commands::fmp_test(cfg, &dir),
        Command::Capacity => commands::capacity(cfg, &dir),
        Command::Ipc => commands::ipc(cfg, &dir),
        Command::Lyapunov => commands::lyapunov(cfg, &dir),
        Command::Sweep => sweep::sweep(cfg, &dir),
        Command::Approx => commands::approx(cfg, &dir),
    }
}

/// Loads `path`, applies `overrides` and runs `cmd`.
pub fn run_file(cmd: Command, path: &Path, overrides: &Overrides) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(path)?;
    overrides.apply(&mut cfg);
    run(cmd, &cfg)
}

//! Batch runner: TOML configuration in, JSON results and CSV decay tables out.

pub mod config;
pub mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use config::RunConfig;
pub use run::{execute, RunResult};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("fit failed: {0}")]
    Fit(hybrid_irb::Error),
    #[error("{0}")]
    Simulation(hybrid_irb::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<hybrid_irb::Error> for CliError {
    fn from(e: hybrid_irb::Error) -> Self {
        match e {
            hybrid_irb::Error::FitFailure(_) | hybrid_irb::Error::DegenerateFit(_) => {
                CliError::Fit(e)
            }
            other => CliError::Simulation(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Fit(_) => 2,
            _ => 1,
        }
    }
}

/// Overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub exact: bool,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.output = Some(out.clone());
    }
    if overrides.exact {
        cfg.exact = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

/// Runs `cfg` and writes `result.json`, `decay.csv` (or `resources.csv`)
/// and `timing.json` into the output directory.
pub fn run_and_write(cfg: &RunConfig) -> Result<RunResult, CliError> {
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|source| CliError::Io {
        path: out.clone(),
        source,
    })?;
    let start = Instant::now();
    let result = execute(cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    write(out.join("result.json"), &result.to_json())?;
    if result.resources.is_empty() {
        write(out.join("decay.csv"), &result.decay_table())?;
    } else {
        write(out.join("resources.csv"), &result.resource_table())?;
    }
    write(
        out.join("timing.json"),
        &format!("{{\n  \"wall_clock_seconds\": {elapsed}\n}}\n"),
    )?;
    eprintln!("finished in {elapsed:.2} s, results in {}", out.display());
    Ok(result)
}

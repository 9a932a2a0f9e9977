//! Scenario runner behind the `ensemble-lab` binary.

pub mod config;
pub mod run;
pub mod svg;
pub mod synthetic;

use std::path::PathBuf;

pub use config::{Overrides, ScenarioConfig};
pub use run::{run_scenario, write_output, OutputFile, RunOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(#[from] ensemble_core::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for bad configs, 3 for numeric failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

/// Reads a config file, checks it matches `command`, then applies overrides.
pub fn load_config(command: &str, path: Option<&std::path::Path>, o: &Overrides) -> Result<ScenarioConfig, CliError> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            let c = ScenarioConfig::from_json(&text)?;
            if c.command() != command {
                return Err(CliError::Config(format!(
                    "config is for `{}`, not `{command}`",
                    c.command()
                )));
            }
            c
        }
        None => ScenarioConfig::default_for(command)?,
    };
    config.apply(o);
    Ok(config)
}

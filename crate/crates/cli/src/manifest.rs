use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::args::Cli;
use crate::commands::{self, write_json, Outcome};
use crate::Failure;

/// Everything needed to repeat a run. The wall-clock duration is the only
/// field that differs between otherwise identical runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub seed: u64,
    pub invocation: Cli,
    /// Output file names, relative to the output directory.
    pub outputs: Vec<String>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn new(cli: &Cli, outputs: Vec<String>, elapsed: Duration) -> Self {
        Self {
            subcommand: cli.command.name().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cli.global.seed,
            invocation: cli.clone(),
            outputs,
            duration_secs: elapsed.as_secs_f64(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        write_json(&dir.join(Self::FILE_NAME), self)
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("malformed manifest {}: {e}", path.display())))
    }
}

/// Repeat a recorded run, into `out_dir` when given and the recorded
/// directory otherwise.
pub fn rerun(path: &Path, out_dir: Option<PathBuf>) -> Result<Outcome, Failure> {
    let manifest = RunManifest::read(path)?;
    if manifest.tool_version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, running {}",
            manifest.tool_version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let mut cli = manifest.invocation;
    if out_dir.is_some() {
        cli.global.out_dir = out_dir;
    }
    commands::execute(&cli)
}

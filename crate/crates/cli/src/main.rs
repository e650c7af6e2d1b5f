mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Cmd};

/// Exit status for bad flags or inputs.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for numerical failures (quadrature, singular solves).
pub const EXIT_NUMERIC: u8 = 3;
/// Exit status for a check that ran but did not pass.
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<bvgame::Error> for Failure {
    fn from(e: bvgame::Error) -> Self {
        use bvgame::Error::*;
        let code = match e {
            QuadratureNonConvergence { .. } | SingularSystem { .. } => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), Failure> {
    match threads {
        Some(0) => Err(Failure::usage("--threads must be at least 1")),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string())),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.global.threads).and_then(|_| match &cli.command {
        Cmd::Rerun(r) => manifest::rerun(&r.manifest, cli.global.out_dir.clone()),
        _ => commands::execute(&cli),
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.notes {
                println!("{line}");
            }
            ExitCode::from(outcome.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

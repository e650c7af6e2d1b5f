use std::path::PathBuf;
use std::str::FromStr;

use bvgame::analytic::InequalityId;
use bvgame::equilibrium::CurveKind;
use bvgame::{StandardFamily, Strategy, TieRule};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(
    name = "bvgame",
    version,
    about = "Bias-variance game: utility curves, equilibria, simulation, inequality checks and ridge tournaments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GlobalOpts {
    /// Seed for every random draw in the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Winner's reward R; the winner is paid R − error².
    #[arg(long, global = true, default_value_t = 1.0)]
    pub reward: f64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (default `out`; for `rerun`, the manifest's own).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1e-11)]
    pub abs_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long, global = true, default_value_t = 400)]
    pub max_subdiv: usize,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cmd {
    /// Utility curves of player i along the frontier, one CSV per opponent value.
    Curves(CurvesArgs),
    /// Pure Nash equilibria on a frontier grid.
    Pne(PneArgs),
    /// Monte Carlo play of two strategies, checked against quadrature.
    Simulate(SimulateArgs),
    /// Evaluate the dominance inequalities on a grid (exit 4 on any failure).
    Verify(VerifyArgs),
    /// Two-player ridge regression tournament.
    Tournament(TournamentArgs),
    /// Re-run the command recorded in a manifest.
    Rerun(RerunArgs),
}

impl Cmd {
    pub fn name(&self) -> &'static str {
        match self {
            Cmd::Curves(_) => "curves",
            Cmd::Pne(_) => "pne",
            Cmd::Simulate(_) => "simulate",
            Cmd::Verify(_) => "verify",
            Cmd::Tournament(_) => "tournament",
            Cmd::Rerun(_) => "rerun",
        }
    }
}

fn parse_family(s: &str) -> Result<StandardFamily, String> {
    StandardFamily::from_str(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Expost,
    Expected,
}

impl From<KindArg> for CurveKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Expost => CurveKind::Expost,
            KindArg::Expected => CurveKind::Expected,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CurvesArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: StandardFamily,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Opponent realizations `a` (expost) or opponent biases μ_j (expected).
    #[arg(long, value_delimiter = ',', required = true)]
    pub opponent: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PneArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: StandardFamily,
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Also check that each equilibrium survives halving the grid step.
    #[arg(long)]
    pub refine: bool,
}

/// `family:mu:sigma`, e.g. `normal:0.3:0.95`.
pub fn parse_strategy(s: &str) -> Result<Strategy, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [fam, mu, sigma] = parts.as_slice() else {
        return Err(format!("expected family:mu:sigma, got {s:?}"));
    };
    let family = parse_family(fam)?;
    let mu: f64 = mu.parse().map_err(|_| format!("bad mu {mu:?}"))?;
    let sigma: f64 = sigma.parse().map_err(|_| format!("bad sigma {sigma:?}"))?;
    Strategy::new(family, mu, sigma).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieArg {
    SplitExpected,
    RandomHalf,
}

impl From<TieArg> for TieRule {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::SplitExpected => TieRule::SplitExpected,
            TieArg::RandomHalf => TieRule::RandomHalf,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Player 1 strategy as family:mu:sigma.
    #[arg(long, value_parser = parse_strategy)]
    pub s1: Strategy,
    /// Player 2 strategy as family:mu:sigma.
    #[arg(long, value_parser = parse_strategy)]
    pub s2: Strategy,
    #[arg(long, default_value_t = 1_000_000)]
    pub rounds: u64,
    #[arg(long, value_enum, default_value_t = TieArg::SplitExpected)]
    pub tie_rule: TieArg,
}

fn parse_inequality(s: &str) -> Result<InequalityId, String> {
    InequalityId::LADDER
        .iter()
        .chain(&[InequalityId::DebugFlipped])
        .copied()
        .find(|id| id.name() == s)
        .ok_or_else(|| {
            format!(
                "unknown inequality {s:?}; valid: critical, d1, d2, b1, b2, b3, b4, debug-flipped"
            )
        })
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0.01)]
    pub mu_step: f64,
    #[arg(long, default_value_t = 0.99)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub a_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub a_step: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
    /// Inequalities to check (default: the seven-member ladder).
    #[arg(long, value_delimiter = ',', value_parser = parse_inequality)]
    pub ids: Vec<InequalityId>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["data", "synthetic"]))]
pub struct TournamentArgs {
    /// Headered numeric CSV file.
    #[arg(long, requires = "target")]
    pub data: Option<PathBuf>,
    /// Label column of --data.
    #[arg(long)]
    pub target: Option<String>,
    /// Generate data with uniform features and ones as true weights.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub p: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Comma-separated increasing λ values (default: 0 and 21 log-spaced
    /// values from 1e-3 to 10).
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0.1)]
    pub test_fraction: f64,
    /// Skip z-scoring features and label before the tournament.
    #[arg(long)]
    pub no_standardize: bool,
    /// Exit 4 unless both players' totals fall with their own λ in at least
    /// 90% of adjacent grid steps.
    #[arg(long)]
    pub trend_check: bool,
    /// Also write the (raw) synthetic dataset as CSV.
    #[arg(long)]
    pub write_dataset: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

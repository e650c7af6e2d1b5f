use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bvgame::analytic::{self, InequalityId, LadderGrid};
use bvgame::equilibrium::{self, expected_curve, expost_curve, CurveKind, FrontierGrid};
use bvgame::numeric::{self, QuadratureSpec};
use bvgame::ridge::{self, TournamentSpec};
use bvgame::GameConfig;
use serde::Serialize;
use serde_json::json;

use crate::args::{
    Cli, Cmd, CurvesArgs, GlobalOpts, PneArgs, SimulateArgs, TournamentArgs, VerifyArgs,
};
use crate::manifest::RunManifest;
use crate::{Failure, EXIT_VERIFY};

pub const DEFAULT_OUT_DIR: &str = "out";

pub struct Outcome {
    pub code: u8,
    pub notes: Vec<String>,
}

/// Files written by a subcommand plus its exit status.
struct Produced {
    files: Vec<String>,
    code: u8,
    notes: Vec<String>,
}

impl Produced {
    fn ok(files: Vec<String>, notes: Vec<String>) -> Self {
        Self {
            files,
            code: 0,
            notes,
        }
    }
}

/// Run a subcommand, then record a manifest next to its outputs.
pub fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let mut cli = cli.clone();
    let out_dir = cli
        .global
        .out_dir
        .get_or_insert_with(|| PathBuf::from(DEFAULT_OUT_DIR))
        .clone();
    fs::create_dir_all(&out_dir)?;
    let start = Instant::now();
    let g = &cli.global;
    let produced = match &cli.command {
        Cmd::Curves(a) => curves(g, a, &out_dir)?,
        Cmd::Pne(a) => pne(g, a, &out_dir)?,
        Cmd::Simulate(a) => simulate(g, a, &out_dir)?,
        Cmd::Verify(a) => verify(a, &out_dir)?,
        Cmd::Tournament(a) => tournament(g, a, &out_dir)?,
        Cmd::Rerun(_) => return Err(Failure::usage("a manifest cannot record a rerun")),
    };
    let manifest = RunManifest::new(&cli, produced.files, start.elapsed());
    manifest.write(&out_dir)?;
    let mut notes = produced.notes;
    notes.push(format!(
        "manifest: {}",
        out_dir.join(RunManifest::FILE_NAME).display()
    ));
    Ok(Outcome {
        code: produced.code,
        notes,
    })
}

fn quadrature(g: &GlobalOpts) -> Result<QuadratureSpec, Failure> {
    let q = QuadratureSpec {
        abs_tol: g.abs_tol,
        rel_tol: g.rel_tol,
        max_subdivisions: g.max_subdiv,
        ..QuadratureSpec::default()
    };
    q.validate()?;
    Ok(q)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn curves(g: &GlobalOpts, a: &CurvesArgs, dir: &Path) -> Result<Produced, Failure> {
    let quad = quadrature(g)?;
    let grid = FrontierGrid::with_step(a.family, a.grid_step, GameConfig::with_reward(g.reward)?)?;
    let mut files = Vec::new();
    for &opp in &a.opponent {
        let curve = match CurveKind::from(a.kind) {
            CurveKind::Expost => expost_curve(&grid, opp, &quad)?,
            CurveKind::Expected => expected_curve(&grid, opp, &quad)?,
        };
        let name = curve.file_name();
        curve.write_csv(fs::File::create(dir.join(&name))?)?;
        files.push(name);
    }
    let notes = vec![format!(
        "wrote {} curve file(s) to {}",
        files.len(),
        dir.display()
    )];
    Ok(Produced::ok(files, notes))
}

fn pne(g: &GlobalOpts, a: &PneArgs, dir: &Path) -> Result<Produced, Failure> {
    let quad = quadrature(g)?;
    let grid = FrontierGrid::with_step(a.family, a.grid_step, GameConfig::with_reward(g.reward)?)?;
    let result = equilibrium::find_pne(&grid, &quad)?;
    let survives = if a.refine {
        Some(equilibrium::survives_refinement(&grid, &result, &quad)?)
    } else {
        None
    };
    let name = format!("{}_pne_R{}.json", a.family, g.reward);
    let notes = vec![format!("equilibria: {:?}", result.equilibria)];
    write_json(
        &dir.join(&name),
        &json!({ "pne": result, "survives_refinement": survives }),
    )?;
    Ok(Produced::ok(vec![name], notes))
}

fn simulate(g: &GlobalOpts, a: &SimulateArgs, dir: &Path) -> Result<Produced, Failure> {
    let config = GameConfig {
        tie_rule: a.tie_rule.into(),
        ..GameConfig::with_reward(g.reward)?
    };
    let sim = numeric::simulate(&a.s1, &a.s2, &config, a.rounds, g.seed)?;
    let quad = quadrature(g)?;
    let comparison = match (
        numeric::expected_utility(&a.s1, &a.s2, &config, &quad),
        numeric::expected_utility(&a.s2, &a.s1, &config, &quad),
    ) {
        (Ok(u1), Ok(u2)) => {
            let z = |m: f64, u: f64, se: f64| if se > 0.0 { (m - u) / se } else { 0.0 };
            json!({
                "expected_utility": [u1, u2],
                "z_scores": [
                    z(sim.mean_payoffs.0, u1, sim.std_errors.0),
                    z(sim.mean_payoffs.1, u2, sim.std_errors.1),
                ],
            })
        }
        (Err(e), _) | (_, Err(e)) => json!({ "unavailable": e.to_string() }),
    };
    let name = "simulate.json".to_string();
    let notes = vec![format!(
        "mean payoffs ({:.6}, {:.6}) +/- ({:.2e}, {:.2e})",
        sim.mean_payoffs.0, sim.mean_payoffs.1, sim.std_errors.0, sim.std_errors.1
    )];
    write_json(
        &dir.join(&name),
        &json!({
            "strategies": [a.s1, a.s2],
            "config": config,
            "result": sim,
            "comparison": comparison,
        }),
    )?;
    Ok(Produced::ok(vec![name], notes))
}

fn verify(a: &VerifyArgs, dir: &Path) -> Result<Produced, Failure> {
    let grid = LadderGrid {
        mu_step: a.mu_step,
        mu_max: a.mu_max,
        a_min: a.a_min,
        a_max: a.a_max,
        a_step: a.a_step,
    };
    let ids: &[InequalityId] = if a.ids.is_empty() {
        &InequalityId::LADDER
    } else {
        &a.ids
    };
    let report = analytic::verify(ids, &grid, a.tolerance)?;
    let notes = report
        .inequalities
        .iter()
        .map(|r| {
            format!(
                "{:<14} {}  worst {:.3e}",
                r.id.name(),
                if r.passed { "pass" } else { "FAIL" },
                r.worst_lhs
            )
        })
        .collect();
    let name = "verify.json".to_string();
    write_json(&dir.join(&name), &report)?;
    Ok(Produced {
        files: vec![name],
        code: if report.all_passed { 0 } else { EXIT_VERIFY },
        notes,
    })
}

/// `0` followed by 21 log-spaced values from 1e-3 to 10.
fn default_lambda_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..=20).map(|k| 10f64.powf(-3.0 + 0.2 * k as f64)))
        .collect()
}

fn tournament(g: &GlobalOpts, a: &TournamentArgs, dir: &Path) -> Result<Produced, Failure> {
    let mut files = Vec::new();
    let (raw, source) = match (&a.data, &a.target) {
        (Some(path), Some(target)) => (
            ridge::load_csv(path, target)?,
            json!({ "csv": path, "target": target }),
        ),
        _ if a.synthetic => (
            ridge::synth_data(a.n, &vec![1.0; a.p], a.noise_sd, g.seed)?,
            json!({ "synthetic": { "n": a.n, "p": a.p, "noise_sd": a.noise_sd, "w0": "ones", "seed": g.seed } }),
        ),
        _ => return Err(Failure::usage("give --data with --target, or --synthetic")),
    };
    if a.write_dataset {
        let name = "dataset.csv".to_string();
        raw.save_csv(&dir.join(&name))?;
        files.push(name);
    }
    let (data, standardization) = if a.no_standardize {
        (raw, None)
    } else {
        let (d, t) = ridge::standardize(&raw)?;
        (d, Some(t))
    };
    let spec = TournamentSpec {
        lambda_grid: if a.lambda_grid.is_empty() {
            default_lambda_grid()
        } else {
            a.lambda_grid.clone()
        },
        test_fraction: a.test_fraction,
        repetitions: a.repetitions,
        reward: g.reward,
        // distinct from the data seed so splits and features use unrelated streams
        seed: g.seed.wrapping_add(1),
        shared_split: false,
    };
    let matrix = ridge::tournament(&data, &spec)?;
    let trend = matrix.trend();
    for player in [1, 2] {
        let name = format!("tournament_player{player}.csv");
        matrix.write_csv(player, fs::File::create(dir.join(&name))?)?;
        files.push(name);
    }
    let name = "tournament.json".to_string();
    write_json(
        &dir.join(&name),
        &json!({
            "grid": matrix.grid,
            "seed": g.seed,
            "spec": spec,
            "source": source,
            "standardization": standardization,
            "trend": trend,
        }),
    )?;
    files.push(name);

    let monotone = trend.player1_nonincreasing >= 0.9 && trend.player2_nonincreasing >= 0.9;
    let notes = vec![format!(
        "own-lambda nonincreasing share: player1 {:.3}, player2 {:.3}",
        trend.player1_nonincreasing, trend.player2_nonincreasing
    )];
    Ok(Produced {
        files,
        code: if a.trend_check && !monotone {
            EXIT_VERIFY
        } else {
            0
        },
        notes,
    })
}

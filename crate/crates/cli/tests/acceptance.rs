//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line straight to stdout so the summary survives output capture.

use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bvgame::analytic::{self, InequalityId, LadderGrid};
use bvgame::equilibrium::{self, expected_curve, expost_curve, FrontierGrid};
use bvgame::numeric::{self, QuadratureSpec};
use bvgame::ridge::{self, TournamentSpec};
use bvgame::{FrontierStrategy, GameConfig, StandardFamily, Strategy};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, pass: bool, detail: String) {
    let line = format!(
        "criterion {n}: {} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn grid_01_99() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

fn grid_a() -> Vec<f64> {
    (0..=50).map(|i| i as f64 / 10.0).collect()
}

fn frontier(family: StandardFamily, mu: f64) -> Strategy {
    FrontierStrategy::new(family, mu).unwrap().strategy()
}

#[test]
fn criterion_01_closed_form_matches_quadrature() {
    let start = Instant::now();
    let cfg = GameConfig::default();
    let quad = QuadratureSpec::default();
    let mut worst = (0.0f64, 0.0, 0.0);
    for &mu in &grid_01_99() {
        let s = frontier(StandardFamily::Normal, mu);
        for &a in &grid_a() {
            let closed = analytic::expost_utility_normal(mu, a).unwrap();
            let quadr = numeric::expost_utility(&s, a, &cfg, &quad).unwrap();
            let d = (closed - quadr).abs();
            if d > worst.0 {
                worst = (d, mu, a);
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        worst.0 <= 1e-9 && elapsed <= Duration::from_secs(10),
        format!(
            "max |closed - quadrature| = {:.3e} at (mu={}, a={}), {:.2?} on 99x51 grid",
            worst.0, worst.1, worst.2, elapsed
        ),
    );
}

#[test]
fn criterion_02_derivative_matches_finite_differences() {
    let h = 1e-6;
    let mut worst = (0.0f64, 0.0, 0.0);
    for &mu in &grid_01_99() {
        for &a in &grid_a() {
            let fd = (analytic::expost_utility_normal(mu + h, a).unwrap()
                - analytic::expost_utility_normal(mu - h, a).unwrap())
                / (2.0 * h);
            let d = (analytic::dmu_expost_normal(mu, a).unwrap() - fd).abs();
            if d > worst.0 {
                worst = (d, mu, a);
            }
        }
    }
    report(
        2,
        worst.0 <= 1e-5,
        format!(
            "max |derivative - central FD (h=1e-6)| = {:.3e} at (mu={}, a={})",
            worst.0, worst.1, worst.2
        ),
    );
}

#[test]
fn criterion_03_lower_bias_is_ex_post_dominant_for_normal() {
    let cfg = GameConfig::default();
    let quad = QuadratureSpec::default();
    let grid = FrontierGrid::new(StandardFamily::Normal, grid_01_99(), cfg).unwrap();
    let mut max_rise = f64::NEG_INFINITY;
    for &a in &grid_a() {
        let curve = expost_curve(&grid, a, &quad).unwrap();
        max_rise = max_rise.max(curve.max_rise());
    }
    let full = FrontierGrid::with_step(StandardFamily::Normal, 0.01, cfg).unwrap();
    let pne = equilibrium::find_pne(&full, &quad).unwrap();
    let all_zero = pne.best_response_table.iter().all(|e| e.mu_i_star == 0.0);
    report(
        3,
        max_rise <= 1e-12 && all_zero,
        format!(
            "largest rise along mu over 51 realizations = {max_rise:.3e}; best response to every grid mu_j is 0: {all_zero}"
        ),
    );
}

#[test]
fn criterion_04_inequality_ladder() {
    let start = Instant::now();
    let report_ = analytic::verify(&InequalityId::LADDER, &LadderGrid::default(), 1e-12).unwrap();
    let elapsed = start.elapsed();
    let summary: Vec<String> = report_
        .inequalities
        .iter()
        .map(|r| format!("{}={:.2e}", r.id.name(), r.worst_lhs))
        .collect();
    report(
        4,
        report_.all_passed && report_.inequalities.len() == 7 && elapsed <= Duration::from_secs(30),
        format!("worst values {} in {:.2?}", summary.join(" "), elapsed),
    );
}

#[test]
fn criterion_05_curve_shapes() {
    let quad = QuadratureSpec::default();
    let cfg = GameConfig::default();
    let mut parts = Vec::new();
    let mut pass = true;

    let laplace = FrontierGrid::with_step(StandardFamily::Laplace, 0.01, cfg).unwrap();
    let rise = [0.5, 1.0, 2.0]
        .iter()
        .map(|&a| expost_curve(&laplace, a, &quad).unwrap().max_rise())
        .fold(f64::NEG_INFINITY, f64::max);
    pass &= rise <= 1e-12;
    parts.push(format!("(a) laplace ex post max rise {rise:.2e}"));

    let logistic = FrontierGrid::with_step(StandardFamily::Logistic, 0.01, cfg).unwrap();
    let rise = [0.0, 0.25, 0.5, 0.75]
        .iter()
        .map(|&mj| expected_curve(&logistic, mj, &quad).unwrap().max_rise())
        .fold(f64::NEG_INFINITY, f64::max);
    pass &= rise <= 1e-12;
    parts.push(format!("(b) logistic expected max rise {rise:.2e}"));

    let uniform = FrontierGrid::with_step(StandardFamily::Uniform, 0.01, cfg).unwrap();
    let (argmax, _) = expected_curve(&uniform, 0.0, &quad).unwrap().argmax();
    let pne = equilibrium::find_pne(&uniform, &quad).unwrap();
    let sym: Vec<f64> = pne.symmetric().collect();
    let ok_c =
        argmax > 0.02 && argmax < *uniform.mus.last().unwrap() && sym.iter().any(|&m| m > 0.0);
    pass &= ok_c;
    parts.push(format!(
        "(c) uniform argmax vs mu_j=0 is {argmax}, symmetric PNE {sym:?}"
    ));

    let mut rise_d = f64::NEG_INFINITY;
    for reward in [0.5, 5.0] {
        let g = FrontierGrid::with_step(
            StandardFamily::Normal,
            0.01,
            GameConfig::with_reward(reward).unwrap(),
        )
        .unwrap();
        for mj in [0.0, 0.25, 0.5, 0.75] {
            rise_d = rise_d.max(expected_curve(&g, mj, &quad).unwrap().max_rise());
        }
    }
    pass &= rise_d <= 1e-12;
    parts.push(format!(
        "(d) normal R in {{0.5, 5}} expected max rise {rise_d:.2e}"
    ));

    report(5, pass, parts.join("; "));
}

#[test]
fn criterion_06_counterexamples() {
    let eps = 0.05;
    let quad = QuadratureSpec::default();
    let cfg = GameConfig::default();
    let normal = |mu, sigma| Strategy::new(StandardFamily::Normal, mu, sigma).unwrap();

    // lowering variance to zero against a near-point-mass opponent at 0
    let opp = normal(0.0, eps);
    let noisy = numeric::expected_utility(&normal(0.5, 0.5), &opp, &cfg, &quad).unwrap();
    let sharp = numeric::expected_utility(&normal(0.5, 0.0), &opp, &cfg, &quad).unwrap();
    let margin1 = noisy - sharp;

    // uniform on [lo, hi] as a location-scale strategy
    let interval = |lo: f64, hi: f64| {
        Strategy::new(
            StandardFamily::Uniform,
            0.5 * (lo + hi),
            (hi - lo) / (2.0 * 3f64.sqrt()),
        )
        .unwrap()
    };
    let opp = interval(-1.0 - eps, 1.0 + eps);
    let biased =
        numeric::expected_utility(&interval(-1.0, 1.0 + 2.0 * eps), &opp, &cfg, &quad).unwrap();
    let centred =
        numeric::expected_utility(&interval(-1.0 - eps, 1.0 + eps), &opp, &cfg, &quad).unwrap();
    let margin2 = biased - centred;

    let floor = 100.0 * quad.abs_tol;
    report(
        6,
        margin1 > floor && margin2 > floor,
        format!(
            "variance cut: {noisy:.6} > {sharp:.3e} (margin {margin1:.3e}); bias cut: {biased:.6} > {centred:.6} (margin {margin2:.3e})"
        ),
    );
}

fn random_ir_strategy(rng: &mut ChaCha8Rng) -> Strategy {
    let family = StandardFamily::ALL[rng.random_range(0..StandardFamily::ALL.len())];
    let radius = rng.random_range(0.2f64..=1.0).sqrt();
    let angle = rng.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
    // σ bounded away from zero keeps every pair continuous
    let sigma = (radius * angle.cos()).max(0.05);
    let mu = radius * angle.sin();
    Strategy::new(family, mu, sigma).unwrap()
}

#[test]
fn criterion_07_monte_carlo_oracle() {
    let quad = QuadratureSpec::default();
    let cfg = GameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_z = 0.0f64;
    let mut ir_ok = true;
    let mut all_ir = true;
    for k in 0..20u64 {
        let (s1, s2) = (random_ir_strategy(&mut rng), random_ir_strategy(&mut rng));
        all_ir &= bvgame::game::is_ir(&s1) && bvgame::game::is_ir(&s2);
        let sim = numeric::simulate(&s1, &s2, &cfg, 1_000_000, 7000 + k).unwrap();
        let u1 = numeric::expected_utility(&s1, &s2, &cfg, &quad).unwrap();
        let u2 = numeric::expected_utility(&s2, &s1, &cfg, &quad).unwrap();
        worst_z = worst_z
            .max((sim.mean_payoffs.0 - u1).abs() / sim.std_errors.0)
            .max((sim.mean_payoffs.1 - u2).abs() / sim.std_errors.1);
        ir_ok &= sim.mean_payoffs.0 >= -4.0 * sim.std_errors.0
            && sim.mean_payoffs.1 >= -4.0 * sim.std_errors.1;
    }
    report(
        7,
        worst_z <= 4.0 && ir_ok && all_ir,
        format!("20 pairs x 1e6 rounds: worst |MC - quadrature| = {worst_z:.2} SE; IR means nonnegative within 4 SE: {ir_ok}"),
    );
}

#[test]
fn criterion_08_ridge_tournament_trends() {
    let start = Instant::now();
    let raw = ridge::synth_data(2000, &[1.0; 8], 1.0, 8).unwrap();
    let (data, _) = ridge::standardize(&raw).unwrap();
    let spec = TournamentSpec {
        lambda_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
        test_fraction: 0.1,
        repetitions: 20,
        reward: 1.0,
        seed: 9,
        shared_split: false,
    };
    let m = ridge::tournament(&data, &spec).unwrap();
    let t = m.trend();
    let elapsed = start.elapsed();
    report(
        8,
        t.passes(0.9) && elapsed <= Duration::from_secs(60),
        format!(
            "own-lambda nonincreasing share p1={:.3} p2={:.3}; lower-bias gain vs low-lambda opp {:.2} < vs high-lambda opp {:.2}; {:.2?}",
            t.player1_nonincreasing, t.player2_nonincreasing, t.gain_vs_low_opponent, t.gain_vs_high_opponent, elapsed
        ),
    );
}

#[test]
fn criterion_09_asymptotic_bias_variance() {
    let gram = DMatrix::identity(1, 1);
    let e1 = DVector::from_vec(vec![1.0]);
    let lambdas: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut prev = (f64::NEG_INFINITY, f64::INFINITY);
    for &lam in &lambdas {
        let (b, v) = ridge::asymptotic_bias_variance(&gram, &e1, &e1, 1.0, lam).unwrap();
        worst = worst
            .max((b - lam / (1.0 + lam)).abs())
            .max((v - 1.0 / (1.0 + lam).powi(2)).abs());
        monotone &= b >= prev.0 && v <= prev.1;
        prev = (b, v);
    }
    report(
        9,
        monotone && worst <= 1e-12,
        format!("50-point lambda grid on [0, 9.8]: monotone {monotone}, max deviation from scalar forms {worst:.2e}"),
    );
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bvgame"))
        .args(args)
        .output()
        .unwrap()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_10_cli_reruns_are_bit_identical() {
    let runs: [&[&str]; 5] = [
        &[
            "curves",
            "--family",
            "uniform",
            "--kind",
            "expected",
            "--opponent",
            "0,0.5",
            "--grid-step",
            "0.05",
        ],
        &["pne", "--family", "logistic", "--grid-step", "0.1"],
        &[
            "simulate",
            "--s1",
            "normal:0.3:0.95",
            "--s2",
            "laplace:0.1:0.5",
            "--rounds",
            "200000",
        ],
        &["verify", "--mu-step", "0.05", "--a-step", "0.25"],
        &[
            "tournament",
            "--synthetic",
            "--n",
            "400",
            "--p",
            "4",
            "--repetitions",
            "3",
            "--lambda-grid",
            "0,0.5,1",
        ],
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut checked = Vec::new();
    let mut pass = true;
    for (k, args) in runs.iter().enumerate() {
        let first = tmp.path().join(format!("run{k}"));
        let second = tmp.path().join(format!("rerun{k}"));
        let mut full: Vec<&str> = vec!["--seed", "99", "--out-dir", first.to_str().unwrap()];
        full.extend_from_slice(args);
        let out = run_cli(&full);
        let manifest = first.join("manifest.json");
        let rerun = run_cli(&[
            "rerun",
            manifest.to_str().unwrap(),
            "--out-dir",
            second.to_str().unwrap(),
        ]);
        let same = out.status.success() && rerun.status.success() && {
            let (a, b) = (snapshot(&first), snapshot(&second));
            !a.is_empty() && a == b
        };
        if !same {
            pass = false;
        }
        checked.push(format!(
            "{}={}",
            args[0],
            if same { "identical" } else { "DIFFERENT" }
        ));
    }
    report(
        10,
        pass,
        format!("rerun from manifest: {}", checked.join(" ")),
    );
}

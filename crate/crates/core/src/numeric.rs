//! Quadrature-based utilities for any family, and Monte Carlo play of the
//! game as an independent check on them.

use std::cell::Cell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::distributions::{StandardFamily, Strategy};
use crate::error::{Error, Result};
use crate::exec;
use crate::game::{round_payoffs, Comparison, GameConfig};
use crate::quadrature::{integrate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Half-width of the opponent integral, in opponent standard deviations.
    pub outer_truncation: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-9,
            max_subdivisions: 400,
            outer_truncation: 10.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.abs_tol > 0.0) {
            return bad("abs_tol", format!("must be positive, got {}", self.abs_tol));
        }
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol", format!("must be positive, got {}", self.rel_tol));
        }
        if self.max_subdivisions < 8 {
            return bad(
                "max_subdivisions",
                format!("must be at least 8, got {}", self.max_subdivisions),
            );
        }
        if !(self.outer_truncation >= 8.0) {
            return bad(
                "outer_truncation",
                format!("must be at least 8, got {}", self.outer_truncation),
            );
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Interval on which a realization `x` of the player beats opponent
/// realization `a`.
fn win_region(a: f64, comparison: Comparison, s: &Strategy, truncation: f64) -> (f64, f64) {
    match comparison {
        Comparison::Magnitude => (-a.abs(), a.abs()),
        Comparison::Signed => {
            let floor = match s.support() {
                Some((lo, _)) => lo,
                None => s.mu - truncation * s.sigma,
            };
            (floor.min(a), a)
        }
    }
}

/// Ex post utility `E[(R − X²)·1{X beats a}]` by adaptive quadrature.
///
/// Point masses are evaluated exactly; a point mass tied with `a` receives
/// half the prize under either tie rule.
pub fn expost_utility(
    s: &Strategy,
    a: f64,
    config: &GameConfig,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let key = config.comparison.key(a);
    if s.is_point_mass() {
        let mine = config.comparison.key(s.mu);
        let prize = config.prize(s.mu);
        return Ok(if mine < key {
            prize
        } else if mine == key {
            0.5 * prize
        } else {
            0.0
        });
    }
    let (mut lo, mut hi) = win_region(a, config.comparison, s, quad.outer_truncation);
    if let Some((slo, shi)) = s.support() {
        lo = lo.max(slo);
        hi = hi.min(shi);
    }
    if hi <= lo {
        return Ok(0.0);
    }
    let mut breaks = [0.0, s.mu, 0.0, 0.0, 0.0];
    let mut nb = 2;
    for k in s.kinks() {
        breaks[nb] = k;
        nb += 1;
    }
    let est = integrate(
        |x| (config.reward - x * x) * s.pdf_unchecked(x),
        lo,
        hi,
        &breaks[..nb],
        quad.tolerance(),
    )?;
    Ok(est.value)
}

/// Inner utility used by the outer integral: closed form for normal
/// strategies under the magnitude rule, quadrature otherwise.
fn inner_utility(s: &Strategy, a: f64, config: &GameConfig, quad: &QuadratureSpec) -> Result<f64> {
    if s.family == StandardFamily::Normal
        && !s.is_point_mass()
        && config.comparison == Comparison::Magnitude
    {
        return analytic::expost_utility_normal_general(s.mu, s.sigma, a.abs(), config.reward);
    }
    expost_utility(s, a, config, quad)
}

/// Values of `a` where the ex post utility of `s` has a kink.
fn expost_kinks(s: &Strategy, comparison: Comparison) -> Vec<f64> {
    let mut pts: Vec<f64> = vec![0.0];
    let mut edges: Vec<f64> = s.kinks().collect();
    if s.is_point_mass() {
        edges.push(s.mu);
    }
    for e in edges {
        pts.push(e);
        if comparison == Comparison::Magnitude {
            pts.push(-e);
        }
    }
    pts
}

/// Expected utility of player i against the opponent's whole distribution:
/// the ex post utility integrated over the opponent's realization.
pub fn expected_utility(
    si: &Strategy,
    sj: &Strategy,
    config: &GameConfig,
    quad: &QuadratureSpec,
) -> Result<f64> {
    expected_utility_with(si, sj, config, quad, inner_utility)
}

/// [`expected_utility`] with the inner ex post utility always computed by
/// quadrature, even where a closed form exists.
pub fn expected_utility_quadrature(
    si: &Strategy,
    sj: &Strategy,
    config: &GameConfig,
    quad: &QuadratureSpec,
) -> Result<f64> {
    expected_utility_with(si, sj, config, quad, expost_utility)
}

fn expected_utility_with(
    si: &Strategy,
    sj: &Strategy,
    config: &GameConfig,
    quad: &QuadratureSpec,
    inner: fn(&Strategy, f64, &GameConfig, &QuadratureSpec) -> Result<f64>,
) -> Result<f64> {
    if sj.is_point_mass() {
        return inner(si, sj.mu, config, quad);
    }
    let (lo, hi) = sj.support().unwrap_or((
        sj.mu - quad.outer_truncation * sj.sigma,
        sj.mu + quad.outer_truncation * sj.sigma,
    ));
    let mut breaks = expost_kinks(si, config.comparison);
    breaks.push(sj.mu);
    breaks.extend(sj.kinks());

    let failure: Cell<Option<Error>> = Cell::new(None);
    let est = integrate(
        |a| match inner(si, a, config, quad) {
            Ok(u) => u * sj.pdf_unchecked(a),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        lo,
        hi,
        &breaks,
        quad.tolerance(),
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(est.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub mean_payoffs: (f64, f64),
    pub std_errors: (f64, f64),
    /// Standard error of the per-round payoff difference (player 1 − player 2).
    pub difference_std_error: f64,
    pub rounds: u64,
    pub seed: u64,
}

/// Rounds per independently seeded block.
pub const SIMULATION_BLOCK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

impl Moments {
    fn push(&mut self, p1: f64, p2: f64) {
        for (k, v) in [p1, p2, p1 - p2].into_iter().enumerate() {
            self.sum[k] += v;
            self.sum_sq[k] += v * v;
        }
    }

    fn merge(mut self, other: &Moments) -> Moments {
        for k in 0..3 {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
        self
    }
}

/// Play `rounds` rounds. Block `b` draws from a ChaCha8 stream seeded with
/// `seed` on stream number `b`, and block moments are merged in block order,
/// so the result does not depend on the thread count.
pub fn simulate(
    s1: &Strategy,
    s2: &Strategy,
    config: &GameConfig,
    rounds: u64,
    seed: u64,
) -> Result<SimulationResult> {
    config.validate()?;
    if rounds == 0 {
        return Err(Error::InvalidParameter {
            name: "rounds",
            reason: "must be at least 1".into(),
        });
    }
    let blocks = rounds.div_ceil(SIMULATION_BLOCK);
    let per_block = exec::map_range(blocks as usize, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let start = b as u64 * SIMULATION_BLOCK;
        let len = SIMULATION_BLOCK.min(rounds - start);
        let mut m = Moments::default();
        for _ in 0..len {
            let a1 = s1.draw(&mut rng);
            let a2 = s2.draw(&mut rng);
            let o = round_payoffs(a1, a2, config, &mut rng);
            m.push(o.payoffs.0, o.payoffs.1);
        }
        m
    });
    let total = per_block
        .iter()
        .fold(Moments::default(), |acc, m| acc.merge(m));

    let n = rounds as f64;
    let stats = |k: usize| {
        let mean = total.sum[k] / n;
        let se = if rounds > 1 {
            let var = ((total.sum_sq[k] - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        (mean, se)
    };
    let (m1, se1) = stats(0);
    let (m2, se2) = stats(1);
    let (_, sed) = stats(2);
    Ok(SimulationResult {
        mean_payoffs: (m1, m2),
        std_errors: (se1, se2),
        difference_std_error: sed,
        rounds,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::FrontierStrategy;
    use approx::assert_abs_diff_eq;

    fn normal(mu: f64, sigma: f64) -> Strategy {
        Strategy::new(StandardFamily::Normal, mu, sigma).unwrap()
    }

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn expost_examples() {
        let cfg = GameConfig::default();
        assert_eq!(
            expost_utility(&normal(0.0, 1.0), 0.0, &cfg, &q()).unwrap(),
            0.0
        );
        let v = expost_utility(&normal(0.6, 0.8), 1.0, &cfg, &q()).unwrap();
        assert_abs_diff_eq!(
            v,
            analytic::expost_utility_normal(0.6, 1.0).unwrap(),
            epsilon = 1e-9
        );
        let pm = Strategy::point_mass(StandardFamily::Normal, 0.5);
        assert_eq!(expost_utility(&pm, 1.0, &cfg, &q()).unwrap(), 0.75);
        assert_eq!(expost_utility(&pm, -0.2, &cfg, &q()).unwrap(), 0.0);
    }

    #[test]
    fn expost_uses_magnitude_of_a() {
        let cfg = GameConfig::default();
        let s = Strategy::new(StandardFamily::Laplace, 0.3, 0.9).unwrap();
        let p = expost_utility(&s, 0.7, &cfg, &q()).unwrap();
        let m = expost_utility(&s, -0.7, &cfg, &q()).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn signed_rule_integrates_lower_tail() {
        let cfg = GameConfig {
            comparison: Comparison::Signed,
            ..GameConfig::default()
        };
        // uniform on [−√3, √3] wins iff x < 0
        let u = Strategy::new(StandardFamily::Uniform, 0.0, 1.0).unwrap();
        let v = expost_utility(&u, 0.0, &cfg, &q()).unwrap();
        let r3 = 3f64.sqrt();
        assert_abs_diff_eq!(v, (r3 - r3.powi(3) / 3.0) / (2.0 * r3), epsilon = 1e-12);
    }

    #[test]
    fn nonconvergence_surfaces() {
        let tight = QuadratureSpec {
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            max_subdivisions: 8,
            ..q()
        };
        let err =
            expost_utility(&normal(0.1, 0.5), 2.0, &GameConfig::default(), &tight).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { .. }));
    }

    #[test]
    fn expected_point_masses() {
        let cfg = GameConfig::default();
        let zero = Strategy::point_mass(StandardFamily::Normal, 0.0);
        let one = Strategy::point_mass(StandardFamily::Normal, 1.0);
        assert_eq!(expected_utility(&zero, &one, &cfg, &q()).unwrap(), 1.0);
        assert_eq!(expected_utility(&one, &zero, &cfg, &q()).unwrap(), 0.0);
        let half = Strategy::point_mass(StandardFamily::Normal, 0.5);
        assert_eq!(expected_utility(&half, &half, &cfg, &q()).unwrap(), 0.375);
    }

    #[test]
    fn closed_form_inner_matches_quadrature_inner() {
        let cfg = GameConfig::with_reward(2.5).unwrap();
        for &(mi, mj) in &[(0.0, 0.0), (0.3, 0.7), (0.9, 0.2)] {
            let si = FrontierStrategy::new(StandardFamily::Normal, mi)
                .unwrap()
                .strategy();
            let sj = FrontierStrategy::new(StandardFamily::Normal, mj)
                .unwrap()
                .strategy();
            let a = expected_utility(&si, &sj, &cfg, &q()).unwrap();
            let b = expected_utility_quadrature(&si, &sj, &cfg, &q()).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn example_one_variance_decrease_hurts() {
        let cfg = GameConfig::default();
        let opp = normal(0.0, 0.01);
        let before = expected_utility(&normal(0.5, 0.5), &opp, &cfg, &q()).unwrap();
        let after = expected_utility(
            &Strategy::point_mass(StandardFamily::Normal, 0.5),
            &opp,
            &cfg,
            &q(),
        )
        .unwrap();
        assert!(before > after + 1e-6, "{before} vs {after}");
        assert!(before > 0.0);
    }

    #[test]
    fn simulation_point_masses_exact() {
        let cfg = GameConfig::default();
        let zero = Strategy::point_mass(StandardFamily::Normal, 0.0);
        let one = Strategy::point_mass(StandardFamily::Normal, 1.0);
        let r = simulate(&zero, &one, &cfg, 1000, 3).unwrap();
        assert_eq!(r.mean_payoffs, (1.0, 0.0));
        assert_eq!(r.std_errors, (0.0, 0.0));
    }

    #[test]
    fn simulation_is_deterministic_and_symmetric() {
        let cfg = GameConfig::default();
        let s = FrontierStrategy::new(StandardFamily::Logistic, 0.4)
            .unwrap()
            .strategy();
        let a = simulate(&s, &s, &cfg, 200_000, 11).unwrap();
        let b = simulate(&s, &s, &cfg, 200_000, 11).unwrap();
        assert_eq!(a, b);
        let diff = a.mean_payoffs.0 - a.mean_payoffs.1;
        assert!(diff.abs() <= 4.0 * a.difference_std_error, "{a:?}");
    }

    #[test]
    fn simulation_independent_of_mode() {
        let cfg = GameConfig::default();
        let s1 = normal(0.2, 0.9);
        let s2 = normal(-0.1, 0.7);
        let par = simulate(&s1, &s2, &cfg, 300_000, 5).unwrap();
        let seq = {
            let prev = exec::mode();
            exec::set_mode(exec::Mode::Sequential);
            let r = simulate(&s1, &s2, &cfg, 300_000, 5).unwrap();
            exec::set_mode(prev);
            r
        };
        assert_eq!(par, seq);
    }

    #[test]
    fn simulation_rejects_zero_rounds() {
        let s = normal(0.0, 1.0);
        assert!(simulate(&s, &s, &GameConfig::default(), 0, 1).is_err());
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(q().validate().is_ok());
        assert!(QuadratureSpec {
            max_subdivisions: 4,
            ..q()
        }
        .validate()
        .is_err());
        assert!(QuadratureSpec {
            outer_truncation: 5.0,
            ..q()
        }
        .validate()
        .is_err());
        assert!(QuadratureSpec {
            abs_tol: 0.0,
            ..q()
        }
        .validate()
        .is_err());
    }
}

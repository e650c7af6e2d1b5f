//! Closed forms for normal strategies and the inequalities behind the
//! "lower bias is ex post dominant" result on the frontier `μ² + σ² = 1`.
//!
//! The ex post utility of `X = σZ + μ` (Z standard normal, `R = 1`) against an
//! opponent realization `a ≥ 0` is
//!
//! ```text
//! E[u(X, a)] = σ/√(2π) · [ μ (e₋ − e₊) + a (e₋ + e₊) ],
//! e∓ = exp(−(a ∓ μ)² / (2σ²)),   σ² = 1 − μ².
//! ```
//!
//! The `Φ` terms cancel because `μ² + σ² = 1`. Its μ-derivative is
//! non-positive everywhere on `[0, 1) × [0, ∞)`; the inequality ladder
//! ([`InequalityId`]) is the chain of sufficient conditions used to show
//! that, each of which is evaluated here on grids.
//!
//! Ladder member `b4` carries a `24μ⁴` term in its first bracket. The
//! printed source of that expression (and of the derivative it comes from)
//! reads `24a⁴` there, which cannot be right since every neighbouring term
//! and the matching second bracket is a power of μ alone.

use std::f64::consts::FRAC_1_SQRT_2;

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `Φ(upper) − Φ(lower)` without cancellation in either tail.
pub fn normal_interval_prob(lower: f64, upper: f64) -> f64 {
    if upper <= lower {
        return 0.0;
    }
    let q = |x: f64| 0.5 * erfc(x * FRAC_1_SQRT_2); // upper tail 1 − Φ(x)
    if lower >= 0.0 {
        q(lower) - q(upper)
    } else if upper <= 0.0 {
        q(-upper) - q(-lower)
    } else {
        1.0 - q(upper) - q(-lower)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "sigma",
            detail: format!("need sigma > 0, got {sigma}"),
        })
    }
}

fn check_a(a: f64) -> Result<()> {
    if a >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "a",
            detail: format!("need a >= 0, got {a}"),
        })
    }
}

/// `P(|X| < a)` for `X ~ N(μ, σ²)`.
pub fn truncated_prob_normal(mu: f64, sigma: f64, a: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_a(a)?;
    Ok(normal_interval_prob((-a - mu) / sigma, (a - mu) / sigma))
}

/// `E[X² · 1{|X| < a}]` for `X ~ N(μ, σ²)`.
pub fn truncated_second_moment_normal(mu: f64, sigma: f64, a: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_a(a)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    let two_var = 2.0 * sigma * sigma;
    let e_minus = (-(a - mu).powi(2) / two_var).exp();
    let e_plus = (-(a + mu).powi(2) / two_var).exp();
    let c = sigma * FRAC_1_SQRT_2PI;
    let p = normal_interval_prob((-a - mu) / sigma, (a - mu) / sigma);
    Ok(-mu * c * (e_minus - e_plus) - a * c * (e_minus + e_plus) + (sigma * sigma + mu * mu) * p)
}

/// `E[(R − X²) · 1{|X| < a}]` for an arbitrary normal `X` and reward `R`.
pub fn expost_utility_normal_general(mu: f64, sigma: f64, a: f64, reward: f64) -> Result<f64> {
    let p = truncated_prob_normal(mu, sigma, a)?;
    let m2 = truncated_second_moment_normal(mu, sigma, a)?;
    Ok(reward * p - m2)
}

fn check_frontier_mu(mu: f64) -> Result<()> {
    if (0.0..1.0).contains(&mu) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "mu",
            detail: format!("frontier closed form needs 0 <= mu < 1, got {mu}"),
        })
    }
}

/// Ex post utility of the frontier strategy `√(1−μ²)·Z + μ` against a
/// realization `a`, with reward 1.
pub fn expost_utility_normal(mu: f64, a: f64) -> Result<f64> {
    check_frontier_mu(mu)?;
    check_a(a)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    let var = (1.0 - mu) * (1.0 + mu);
    let sigma = var.sqrt();
    let e_minus = (-(a - mu).powi(2) / (2.0 * var)).exp();
    let e_plus = (-(a + mu).powi(2) / (2.0 * var)).exp();
    Ok(sigma * FRAC_1_SQRT_2PI * (mu * (e_minus - e_plus) + a * (e_minus + e_plus)))
}

/// `∂/∂μ` of [`expost_utility_normal`], for `0 < μ < 1`.
pub fn dmu_expost_normal(mu: f64, a: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain {
            what: "mu",
            detail: format!("derivative needs 0 < mu < 1, got {mu}"),
        });
    }
    check_a(a)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    let var = (1.0 - mu) * (1.0 + mu);
    let s = var.sqrt();
    let e_minus = (-0.5 * (a - mu).powi(2) / var).exp();
    let e_plus = (-0.5 * (a + mu).powi(2) / var).exp();
    let tail = (a * a - mu * mu) * s / (var * var);
    let left = s - (a + mu) * mu / s + tail * (1.0 - a * mu);
    let right = s + (a - mu) * mu / s + tail * (1.0 + a * mu);
    Ok(FRAC_1_SQRT_2PI * (left * e_minus - right * e_plus))
}

/// Direction an inequality asserts for its left-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// `LHS ≥ 0`
    Ge,
    /// `LHS ≤ 0`
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityId {
    /// Rearranged sign condition of the μ-derivative.
    Critical,
    /// `∂/∂a` of `Critical`, times `1 − μ²`.
    D1,
    /// `∂/∂a` of `D1`, times `1 − μ²`.
    D2,
    /// `D1` at `a = 1`.
    B1,
    /// `D2` at `a = 1`.
    B2,
    /// `∂/∂a` of `D2`, rescaled.
    B3,
    /// `∂/∂μ` of `B2`, rescaled.
    B4,
    /// `Critical` with its sign flipped; must fail verification.
    DebugFlipped,
}

impl InequalityId {
    pub const LADDER: [InequalityId; 7] = [
        InequalityId::Critical,
        InequalityId::D1,
        InequalityId::D2,
        InequalityId::B1,
        InequalityId::B2,
        InequalityId::B3,
        InequalityId::B4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityId::Critical => "critical",
            InequalityId::D1 => "d1",
            InequalityId::D2 => "d2",
            InequalityId::B1 => "b1",
            InequalityId::B2 => "b2",
            InequalityId::B3 => "b3",
            InequalityId::B4 => "b4",
            InequalityId::DebugFlipped => "debug-flipped",
        }
    }

    pub fn sense(self) -> Sense {
        match self {
            InequalityId::B1 | InequalityId::B2 | InequalityId::B4 => Sense::Le,
            _ => Sense::Ge,
        }
    }

    pub fn depends_on_a(self) -> bool {
        !matches!(self, InequalityId::B1 | InequalityId::B2 | InequalityId::B4)
    }

    /// Left-hand side at `(μ, a)`; `a` is ignored when [`Self::depends_on_a`]
    /// is false. Requires `0 ≤ μ < 1`.
    pub fn lhs(self, mu: f64, a: f64) -> f64 {
        inequality_lhs(self, mu, a)
    }
}

/// `p·exp(base + k) − q·exp(base − k)`, factored so that only one
/// exponential is formed and the cancellation happens at unit scale.
fn exp_pair(p: f64, q: f64, base: f64, k: f64) -> f64 {
    if k >= 0.0 {
        (base + k).exp() * (p - q * (-2.0 * k).exp())
    } else {
        (base - k).exp() * (p * (2.0 * k).exp() - q)
    }
}

pub fn inequality_lhs(id: InequalityId, mu: f64, a: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&mu), "mu = {mu}");
    let m = mu;
    let m2 = m * m;
    let m3 = m2 * m;
    let m4 = m2 * m2;
    let m5 = m4 * m;
    let m6 = m3 * m3;
    let v = 1.0 - m2;
    match id {
        InequalityId::Critical | InequalityId::DebugFlipped => {
            let c = 2.0 * m2 - a * a - 1.0;
            let tail = 2.0 * m2 * v;
            let lhs = exp_pair(
                c * (1.0 - a * m) + tail,
                c * (1.0 + a * m) + tail,
                0.0,
                a * m / v,
            );
            if id == InequalityId::DebugFlipped {
                -lhs
            } else {
                lhs
            }
        }
        InequalityId::D1 => {
            let lin = a * (2.0 - 3.0 * m2 + 2.0 * m4);
            let quad = a * a * m * (2.0 - 3.0 * m2);
            let cube = a * a * a * m2;
            exp_pair(
                cube + m3 + quad - lin,
                cube - m3 - quad - lin,
                0.0,
                a * m / v,
            )
        }
        InequalityId::D2 => {
            let even = -2.0 + 5.0 * m2 - 4.0 * m4 + 2.0 * m6 + a * a * m2 * (5.0 - 6.0 * m2);
            let odd = a * a * a * m3 + a * m * (2.0 - 7.0 * m2 + 4.0 * m4);
            exp_pair(even + odd, even - odd, 0.0, a * m / v)
        }
        InequalityId::B1 => exp_pair(
            1.0 - m - 2.0 * m2 + m3 + m4,
            1.0 + m - 2.0 * m2 - m3 + m4,
            0.0,
            m / v,
        ),
        InequalityId::B2 => exp_pair(
            1.0 - m - 5.0 * m2 + 3.0 * m3 + 5.0 * m4 - 2.0 * m5 - m6,
            1.0 + m - 5.0 * m2 - 3.0 * m3 + 5.0 * m4 + 2.0 * m5 - m6,
            0.0,
            m / v,
        ),
        InequalityId::B3 => {
            let even = a * a * a * m2 + a * (12.0 - 29.0 * m2 + 16.0 * m4);
            let odd = a * a * m * (8.0 - 9.0 * m2) - m * (4.0 - 7.0 * m2 + 2.0 * m4);
            exp_pair(even + odd, even - odd, 1.0 / v, a * m / v)
        }
        InequalityId::B4 => {
            let even = -11.0 + 31.0 * m2 - 24.0 * m4 + 6.0 * m6;
            let odd = 7.0 * m - 22.0 * m3 + 11.0 * m5;
            exp_pair(even + odd, even - odd, 0.5 / v, m / v)
        }
    }
}

/// Grid over which the ladder is checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderGrid {
    pub mu_step: f64,
    pub mu_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub a_step: f64,
}

impl Default for LadderGrid {
    fn default() -> Self {
        Self {
            mu_step: 0.01,
            mu_max: 0.99,
            a_min: 1.0,
            a_max: 10.0,
            a_step: 0.05,
        }
    }
}

/// `start, start + step, …` up to `end` inclusive (with rounding slack).
pub fn inclusive_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

impl LadderGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.mu_step > 0.0) {
            return bad("mu_step", "must be positive");
        }
        if !(0.0..1.0).contains(&self.mu_max) {
            return bad("mu_max", "must lie in [0, 1)");
        }
        if !(self.a_step > 0.0) {
            return bad("a_step", "must be positive");
        }
        if !(self.a_min >= 0.0 && self.a_max >= self.a_min) {
            return bad("a_min", "need 0 <= a_min <= a_max");
        }
        Ok(())
    }

    pub fn mus(&self) -> Vec<f64> {
        inclusive_grid(0.0, self.mu_max, self.mu_step)
    }

    pub fn realizations(&self) -> Vec<f64> {
        inclusive_grid(self.a_min, self.a_max, self.a_step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub id: InequalityId,
    pub sense: Sense,
    pub grid_points: usize,
    /// Minimum LHS for `ge` inequalities, maximum for `le`.
    pub worst_lhs: f64,
    pub worst_mu: f64,
    pub worst_a: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub grid: LadderGrid,
    pub tolerance: f64,
    pub inequalities: Vec<InequalityReport>,
    pub all_passed: bool,
}

/// Evaluate every requested inequality on the grid. A `ge` inequality passes
/// when its minimum is `≥ −tolerance`; an `le` one when its maximum is
/// `≤ tolerance`.
pub fn verify(
    ids: &[InequalityId],
    grid: &LadderGrid,
    tolerance: f64,
) -> Result<VerificationReport> {
    grid.validate()?;
    let mus = grid.mus();
    let avals = grid.realizations();
    let inequalities: Vec<InequalityReport> = ids
        .iter()
        .map(|&id| {
            let a_axis: &[f64] = if id.depends_on_a() {
                &avals
            } else {
                &[f64::NAN]
            };
            // orient so that larger is worse
            let flip = match id.sense() {
                Sense::Ge => -1.0,
                Sense::Le => 1.0,
            };
            let rows = exec::map_slice(&mus, |&mu| {
                a_axis
                    .iter()
                    .map(|&a| (flip * inequality_lhs(id, mu, a), mu, a))
                    .fold((f64::NEG_INFINITY, mu, f64::NAN), |best, cur| {
                        if cur.0 > best.0 || cur.0.is_nan() {
                            cur
                        } else {
                            best
                        }
                    })
            });
            let (worst, worst_mu, worst_a) =
                rows.into_iter()
                    .fold((f64::NEG_INFINITY, f64::NAN, f64::NAN), |best, cur| {
                        if cur.0 > best.0 || cur.0.is_nan() {
                            cur
                        } else {
                            best
                        }
                    });
            InequalityReport {
                id,
                sense: id.sense(),
                grid_points: mus.len() * a_axis.len(),
                worst_lhs: flip * worst,
                worst_mu,
                worst_a: id.depends_on_a().then_some(worst_a),
                passed: worst <= tolerance,
            }
        })
        .collect();
    let all_passed = inequalities.iter().all(|r| r.passed);
    Ok(VerificationReport {
        grid: *grid,
        tolerance,
        inequalities,
        all_passed,
    })
}

//! Standardized base distributions and location-scale strategies.
//!
//! Every [`StandardFamily`] is scaled so that `Z` has mean 0 and variance 1.
//! A [`Strategy`] is the error distribution `X = σZ + μ`; `σ = 0` is allowed
//! and denotes a point mass at `μ`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use libm::erfc;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_3: f64 = 1.732_050_807_568_877_2;
const SQRT_6: f64 = 2.449_489_742_783_178;

/// Logistic scale giving unit variance: `s²π²/3 = 1`.
const LOGISTIC_SCALE: f64 = SQRT_3 / PI;
/// Laplace scale giving unit variance: `2b² = 1`.
const LAPLACE_SCALE: f64 = FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StandardFamily {
    Normal,
    Laplace,
    Logistic,
    Uniform,
    Triangle,
}

impl StandardFamily {
    pub const ALL: [StandardFamily; 5] = [
        StandardFamily::Normal,
        StandardFamily::Laplace,
        StandardFamily::Logistic,
        StandardFamily::Uniform,
        StandardFamily::Triangle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StandardFamily::Normal => "normal",
            StandardFamily::Laplace => "laplace",
            StandardFamily::Logistic => "logistic",
            StandardFamily::Uniform => "uniform",
            StandardFamily::Triangle => "triangle",
        }
    }

    /// Half-width of the support, or `None` for unbounded families.
    pub fn support_half_width(self) -> Option<f64> {
        match self {
            StandardFamily::Uniform => Some(SQRT_3),
            StandardFamily::Triangle => Some(SQRT_6),
            _ => None,
        }
    }

    /// Points (in standardized units) where the density is not smooth.
    pub fn kinks(self) -> &'static [f64] {
        match self {
            StandardFamily::Normal | StandardFamily::Logistic => &[],
            StandardFamily::Laplace => &[0.0],
            StandardFamily::Uniform => &[-SQRT_3, SQRT_3],
            StandardFamily::Triangle => &[-SQRT_6, 0.0, SQRT_6],
        }
    }

    pub fn pdf(self, x: f64) -> f64 {
        match self {
            StandardFamily::Normal => FRAC_1_SQRT_2PI * (-0.5 * x * x).exp(),
            StandardFamily::Laplace => 0.5 / LAPLACE_SCALE * (-x.abs() / LAPLACE_SCALE).exp(),
            StandardFamily::Logistic => {
                let t = (-x.abs() / LOGISTIC_SCALE).exp();
                t / (LOGISTIC_SCALE * (1.0 + t) * (1.0 + t))
            }
            StandardFamily::Uniform => {
                if x.abs() <= SQRT_3 {
                    0.5 / SQRT_3
                } else {
                    0.0
                }
            }
            StandardFamily::Triangle => {
                let r = SQRT_6 - x.abs();
                if r > 0.0 {
                    r / 6.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(self, x: f64) -> f64 {
        match self {
            StandardFamily::Normal => 0.5 * erfc(-x * FRAC_1_SQRT_2),
            StandardFamily::Laplace => {
                let tail = 0.5 * (-x.abs() / LAPLACE_SCALE).exp();
                if x < 0.0 {
                    tail
                } else {
                    1.0 - tail
                }
            }
            StandardFamily::Logistic => {
                let t = (-x.abs() / LOGISTIC_SCALE).exp();
                let lower = t / (1.0 + t);
                if x < 0.0 {
                    lower
                } else {
                    1.0 - lower
                }
            }
            StandardFamily::Uniform => ((x + SQRT_3) / (2.0 * SQRT_3)).clamp(0.0, 1.0),
            StandardFamily::Triangle => {
                if x <= -SQRT_6 {
                    0.0
                } else if x >= SQRT_6 {
                    1.0
                } else if x < 0.0 {
                    (SQRT_6 + x).powi(2) / 12.0
                } else {
                    1.0 - (SQRT_6 - x).powi(2) / 12.0
                }
            }
        }
    }

    /// Quantile function; `p` must lie in the open interval (0, 1).
    pub fn inverse_cdf(self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p < 1.0, "p = {p}");
        match self {
            StandardFamily::Normal => {
                // one Newton step polishes the rational approximation
                let x = -SQRT_2 * erfc_inv(2.0 * p);
                let pdf = self.pdf(x);
                if pdf > 0.0 {
                    x - (self.cdf(x) - p) / pdf
                } else {
                    x
                }
            }
            StandardFamily::Laplace => {
                if p < 0.5 {
                    LAPLACE_SCALE * (2.0 * p).ln()
                } else {
                    -LAPLACE_SCALE * (2.0 * (1.0 - p)).ln()
                }
            }
            StandardFamily::Logistic => LOGISTIC_SCALE * (p / (1.0 - p)).ln(),
            StandardFamily::Uniform => SQRT_3 * (2.0 * p - 1.0),
            StandardFamily::Triangle => {
                if p < 0.5 {
                    SQRT_6 * ((2.0 * p).sqrt() - 1.0)
                } else {
                    SQRT_6 * (1.0 - (2.0 * (1.0 - p)).sqrt())
                }
            }
        }
    }

    /// One standardized draw via the inverse-CDF transform.
    pub fn draw<R: RngCore + ?Sized>(self, rng: &mut R) -> f64 {
        self.inverse_cdf(open_unit(rng))
    }
}

/// Uniform on the open interval (0, 1) with 53 bits of resolution.
fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

impl fmt::Display for StandardFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StandardFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|fam| fam.name() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "family",
                reason: format!(
                    "unknown family {s:?}; valid families: {}",
                    Self::ALL.map(|f| f.name()).join(", ")
                ),
            })
    }
}

/// Error distribution `X = σZ + μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub family: StandardFamily,
    pub mu: f64,
    pub sigma: f64,
}

impl Strategy {
    pub fn new(family: StandardFamily, mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("must be finite, got {mu}"),
            });
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be finite and non-negative, got {sigma}"),
            });
        }
        Ok(Self { family, mu, sigma })
    }

    pub fn point_mass(family: StandardFamily, mu: f64) -> Self {
        Self {
            family,
            mu,
            sigma: 0.0,
        }
    }

    pub fn is_point_mass(&self) -> bool {
        self.sigma == 0.0
    }

    /// Total squared error `μ² + σ²`.
    pub fn error(&self) -> f64 {
        self.mu * self.mu + self.sigma * self.sigma
    }

    /// Support as a closed interval, `None` when unbounded.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.family
            .support_half_width()
            .map(|w| (self.mu - w * self.sigma, self.mu + w * self.sigma))
    }

    /// Locations where the density has a kink or jump.
    pub fn kinks(&self) -> impl Iterator<Item = f64> + '_ {
        self.family
            .kinks()
            .iter()
            .map(move |&k| self.mu + k * self.sigma)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if self.is_point_mass() {
            return Err(Error::DegenerateStrategy);
        }
        Ok(self.pdf_unchecked(x))
    }

    /// Density without the point-mass check; callers guarantee `σ > 0`.
    #[inline]
    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        self.family.pdf((x - self.mu) / self.sigma) / self.sigma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            return if x >= self.mu { 1.0 } else { 0.0 };
        }
        self.family.cdf((x - self.mu) / self.sigma)
    }

    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_point_mass() {
            // keep the stream position independent of sigma
            let _ = rng.next_u64();
            return self.mu;
        }
        self.sigma * self.family.draw(rng) + self.mu
    }

    /// `n` i.i.d. draws of `σZ + μ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// Strategy on the error frontier `μ² + σ² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierStrategy {
    pub family: StandardFamily,
    pub mu: f64,
}

impl FrontierStrategy {
    pub fn new(family: StandardFamily, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("frontier bias must lie in [0, 1], got {mu}"),
            });
        }
        Ok(Self { family, mu })
    }

    pub fn sigma(&self) -> f64 {
        ((1.0 - self.mu) * (1.0 + self.mu)).max(0.0).sqrt()
    }

    pub fn strategy(&self) -> Strategy {
        Strategy {
            family: self.family,
            mu: self.mu,
            sigma: self.sigma(),
        }
    }
}

impl From<FrontierStrategy> for Strategy {
    fn from(f: FrontierStrategy) -> Self {
        f.strategy()
    }
}

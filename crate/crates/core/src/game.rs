//! Payoff rules of the two-player bias-variance game.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::distributions::Strategy;
use crate::error::{Error, Result};

/// Slack used when testing `μ² + σ² ≤ 1` for strategies built on the frontier.
pub const IR_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// A fair coin picks the winner.
    RandomHalf,
    /// Each player receives half the winner payoff.
    #[default]
    SplitExpected,
}

/// How realizations are ranked. `Magnitude` compares `|a_i|`; `Signed`
/// compares `a_i` directly (the smaller signed error wins).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    #[default]
    Magnitude,
    Signed,
}

impl Comparison {
    #[inline]
    pub fn key(self, a: f64) -> f64 {
        match self {
            Comparison::Magnitude => a.abs(),
            Comparison::Signed => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub reward: f64,
    #[serde(default)]
    pub tie_rule: TieRule,
    #[serde(default = "default_frontier")]
    pub frontier: bool,
    #[serde(default)]
    pub comparison: Comparison,
}

fn default_frontier() -> bool {
    true
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            reward: 1.0,
            tie_rule: TieRule::SplitExpected,
            frontier: true,
            comparison: Comparison::Magnitude,
        }
    }
}

impl GameConfig {
    pub fn with_reward(reward: f64) -> Result<Self> {
        let cfg = Self {
            reward,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reward.is_finite() && self.reward > 0.0) {
            return Err(Error::InvalidParameter {
                name: "reward",
                reason: format!("must be positive and finite, got {}", self.reward),
            });
        }
        Ok(())
    }

    /// Check a strategy against the frontier constraint when it is enabled.
    pub fn admits(&self, s: &Strategy) -> bool {
        !self.frontier || (s.error() - 1.0).abs() <= IR_SLACK
    }

    /// Winner payoff for a realization.
    #[inline]
    pub fn prize(&self, a: f64) -> f64 {
        self.reward - a * a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Player1,
    Player2,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub draws: (f64, f64),
    pub winner: Winner,
    pub payoffs: (f64, f64),
}

/// Play one round. The RNG is consulted only for exact ties under
/// [`TieRule::RandomHalf`].
pub fn round_payoffs<R: RngCore + ?Sized>(
    a1: f64,
    a2: f64,
    config: &GameConfig,
    rng: &mut R,
) -> RoundOutcome {
    let (k1, k2) = (config.comparison.key(a1), config.comparison.key(a2));
    let (winner, payoffs) = if k1 < k2 {
        (Winner::Player1, (config.prize(a1), 0.0))
    } else if k2 < k1 {
        (Winner::Player2, (0.0, config.prize(a2)))
    } else {
        match config.tie_rule {
            TieRule::SplitExpected => (
                Winner::Tie,
                (0.5 * config.prize(a1), 0.5 * config.prize(a2)),
            ),
            TieRule::RandomHalf => {
                if rng.random_bool(0.5) {
                    (Winner::Player1, (config.prize(a1), 0.0))
                } else {
                    (Winner::Player2, (0.0, config.prize(a2)))
                }
            }
        }
    };
    RoundOutcome {
        draws: (a1, a2),
        winner,
        payoffs,
    }
}

/// Expected single-player utility `1 − μ² − σ²`.
pub fn one_player_utility(s: &Strategy) -> f64 {
    1.0 - s.error()
}

/// Individual rationality: `μ² + σ² ≤ 1`.
pub fn is_ir(s: &Strategy) -> bool {
    s.error() <= 1.0 + IR_SLACK
}

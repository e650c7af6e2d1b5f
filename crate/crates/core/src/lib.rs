//! Numerical toolkit for the two-player bias-variance game.
//!
//! Each player picks a prediction-error distribution `X = σZ + μ` over a
//! standardized base variable `Z`. Both draw once; whoever lands closer to
//! zero wins `R − a²` and the other player gets nothing. The crate evaluates
//! that game exactly (closed forms for normal strategies on the
//! `μ² + σ² = 1` frontier), by adaptive quadrature for any supported family,
//! and by seeded Monte Carlo simulation, and searches discretized frontiers
//! for pure Nash equilibria. The [`ridge`] module replays the game with Ridge
//! regression models whose regularization strength plays the role of bias.
//!
//! Grid sweeps, simulations and tournaments fan out over rayon when the
//! `parallel` feature is on (the default); results are identical either way.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod distributions;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod game;
pub mod numeric;
pub mod quadrature;
pub mod ridge;

pub use distributions::{FrontierStrategy, StandardFamily, Strategy};
pub use error::{Error, Result};
pub use game::{Comparison, GameConfig, RoundOutcome, TieRule, Winner};
pub use numeric::{QuadratureSpec, SimulationResult};

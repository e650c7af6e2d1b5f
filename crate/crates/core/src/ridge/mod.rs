//! Ridge regression and the two-player regression tournament.

pub mod dataset;
pub mod model;
pub mod tournament;

pub use dataset::{load_csv, read_csv, standardize, synth_data, Dataset, Standardization};
pub use model::{asymptotic_bias_variance, fit_ridge, predict, NormalEquations, RidgeModel};
pub use tournament::{tournament, PayoffMatrix, TournamentSpec, TrendReport};

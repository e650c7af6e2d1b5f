//! Utility curves, best responses and pure-Nash-equilibrium search on a
//! discretized bias-variance frontier.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::distributions::{FrontierStrategy, StandardFamily, Strategy};
use crate::error::{Error, Result};
use crate::exec;
use crate::game::{Comparison, GameConfig};
use crate::numeric::{expected_utility, expost_utility, QuadratureSpec};

/// Frontier strategies `√(1−μ²)·Z + μ` for a fixed family at the grid's μ values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierGrid {
    pub family: StandardFamily,
    pub mus: Vec<f64>,
    pub config: GameConfig,
}

impl FrontierGrid {
    pub fn new(family: StandardFamily, mus: Vec<f64>, config: GameConfig) -> Result<Self> {
        config.validate()?;
        if mus.is_empty() {
            return Err(Error::InvalidParameter {
                name: "mus",
                reason: "grid is empty".into(),
            });
        }
        if mus.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::InvalidParameter {
                name: "mus",
                reason: "values must lie in [0, 1]".into(),
            });
        }
        if mus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "mus",
                reason: "values must be strictly increasing".into(),
            });
        }
        Ok(Self {
            family,
            mus,
            config,
        })
    }

    /// `0, step, 2·step, …` strictly below 1; `μ = 1` (a point mass) is left out.
    pub fn with_step(family: StandardFamily, step: f64, config: GameConfig) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "step",
                reason: format!("must lie in (0, 1], got {step}"),
            });
        }
        let n = ((1.0 - 1e-9) / step).floor() as usize;
        let mus = (0..=n)
            .map(|i| i as f64 * step)
            .filter(|&m| m < 1.0)
            .collect();
        Self::new(family, mus, config)
    }

    pub fn strategy(&self, mu: f64) -> Strategy {
        FrontierStrategy {
            family: self.family,
            mu,
        }
        .strategy()
    }

    /// Grid spacing, taken as the smallest gap between neighbours.
    pub fn step(&self) -> f64 {
        self.mus
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// The grid with every interval bisected.
    pub fn refined(&self) -> FrontierGrid {
        let mut mus = Vec::with_capacity(2 * self.mus.len());
        for w in self.mus.windows(2) {
            mus.push(w[0]);
            mus.push(0.5 * (w[0] + w[1]));
        }
        mus.push(*self.mus.last().expect("non-empty grid"));
        FrontierGrid {
            family: self.family,
            mus,
            config: self.config,
        }
    }

    fn analytic_expost(&self) -> bool {
        self.family == StandardFamily::Normal
            && self.config.reward == 1.0
            && self.config.comparison == Comparison::Magnitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Expost,
    Expected,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Expost => "expost",
            CurveKind::Expected => "expected",
        }
    }
}

/// Player i's utility at each grid μ against a fixed opponent parameter:
/// a realization `a` for ex post curves, the opponent's μ for expected ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityCurve {
    pub kind: CurveKind,
    pub family: StandardFamily,
    pub reward: f64,
    pub opponent: f64,
    pub points: Vec<(f64, f64)>,
}

impl UtilityCurve {
    /// Largest increase between neighbouring points (≤ 0 for a
    /// nonincreasing curve).
    pub fn max_rise(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1].1 - w[0].1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.points.len() < 2 || self.max_rise() <= slack
    }

    /// Maximizing μ; exact ties go to the smaller μ.
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = self.points[0];
        for &p in &self.points[1..] {
            if p.1 > best.1 {
                best = p;
            }
        }
        best
    }

    /// Largest drop from the curve's first value over μ ≤ `mu_max`.
    pub fn max_drop_until(&self, mu_max: f64) -> f64 {
        let head = self.points[0].1;
        self.points
            .iter()
            .filter(|p| p.0 <= mu_max)
            .map(|p| head - p.1)
            .fold(0.0, f64::max)
    }

    /// `{family}_{kind}_opp{opponent}_R{reward}.csv`
    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_opp{}_R{}.csv",
            self.family,
            self.kind.name(),
            self.opponent,
            self.reward
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mu_i", "utility"])?;
        for (mu, u) in &self.points {
            w.write_record([mu.to_string(), u.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ex post utility over the grid against realization `a`. Uses the closed
/// form for normal strategies with reward 1, quadrature otherwise.
pub fn expost_curve(grid: &FrontierGrid, a: f64, quad: &QuadratureSpec) -> Result<UtilityCurve> {
    if !(a >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "a",
            reason: format!("realization must be >= 0, got {a}"),
        });
    }
    let analytic = grid.analytic_expost();
    let utilities = exec::try_map_slice(&grid.mus, |&mu| {
        if analytic && mu < 1.0 {
            analytic::expost_utility_normal(mu, a)
        } else {
            expost_utility(&grid.strategy(mu), a, &grid.config, quad)
        }
    })?;
    Ok(UtilityCurve {
        kind: CurveKind::Expost,
        family: grid.family,
        reward: grid.config.reward,
        opponent: a,
        points: grid.mus.iter().copied().zip(utilities).collect(),
    })
}

fn check_mu_j(mu_j: f64) -> Result<()> {
    if (0.0..=1.0).contains(&mu_j) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "mu_j",
            reason: format!("opponent bias must lie in [0, 1], got {mu_j}"),
        })
    }
}

/// Expected utility over the grid against the frontier strategy at `mu_j`.
pub fn expected_curve(
    grid: &FrontierGrid,
    mu_j: f64,
    quad: &QuadratureSpec,
) -> Result<UtilityCurve> {
    check_mu_j(mu_j)?;
    let opponent = grid.strategy(mu_j);
    let utilities = exec::try_map_slice(&grid.mus, |&mu| {
        expected_utility(&grid.strategy(mu), &opponent, &grid.config, quad)
    })?;
    Ok(UtilityCurve {
        kind: CurveKind::Expected,
        family: grid.family,
        reward: grid.config.reward,
        opponent: mu_j,
        points: grid.mus.iter().copied().zip(utilities).collect(),
    })
}

/// Grid μ maximizing expected utility against `mu_j`, ties toward smaller μ.
pub fn best_response(grid: &FrontierGrid, mu_j: f64, quad: &QuadratureSpec) -> Result<f64> {
    Ok(expected_curve(grid, mu_j, quad)?.argmax().0)
}

/// Expected utility of every grid μ_i (rows) against every grid μ_j (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityTable {
    pub mus: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl UtilityTable {
    pub fn build(grid: &FrontierGrid, quad: &QuadratureSpec) -> Result<Self> {
        let n = grid.mus.len();
        let strategies: Vec<Strategy> = grid.mus.iter().map(|&m| grid.strategy(m)).collect();
        let flat = exec::map_range(n * n, |k| {
            let (i, j) = (k / n, k % n);
            expected_utility(&strategies[i], &strategies[j], &grid.config, quad)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let values = flat.chunks(n).map(<[f64]>::to_vec).collect();
        Ok(Self {
            mus: grid.mus.clone(),
            values,
        })
    }

    /// Best value in column `j`.
    fn column_max(&self, j: usize) -> f64 {
        self.values
            .iter()
            .map(|row| row[j])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Tie-broken best-response index to column `j`.
    fn best_index(&self, j: usize) -> usize {
        let mut best = 0;
        for i in 1..self.mus.len() {
            if self.values[i][j] > self.values[best][j] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponseEntry {
    pub mu_j: f64,
    pub mu_i_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PneResult {
    pub family: StandardFamily,
    pub reward: f64,
    pub grid_step: f64,
    pub grid_points: usize,
    /// Mutual best-response pairs `(μ₁, μ₂)`.
    pub equilibria: Vec<(f64, f64)>,
    pub best_response_table: Vec<BestResponseEntry>,
}

impl PneResult {
    pub fn symmetric(&self) -> impl Iterator<Item = f64> + '_ {
        self.equilibria
            .iter()
            .filter(|(a, b)| a == b)
            .map(|&(a, _)| a)
    }
}

/// Every grid pair `(μ₁, μ₂)` in which each strategy attains the column
/// maximum against the other. Both players share the strategy class, so a
/// single utility table serves both.
pub fn find_pne(grid: &FrontierGrid, quad: &QuadratureSpec) -> Result<PneResult> {
    let table = UtilityTable::build(grid, quad)?;
    Ok(pne_from_table(grid, &table))
}

pub fn pne_from_table(grid: &FrontierGrid, table: &UtilityTable) -> PneResult {
    let n = table.mus.len();
    let col_max: Vec<f64> = (0..n).map(|j| table.column_max(j)).collect();
    let is_best = |i: usize, j: usize| table.values[i][j] >= col_max[j];
    let mut equilibria = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if is_best(i, j) && is_best(j, i) {
                equilibria.push((table.mus[i], table.mus[j]));
            }
        }
    }
    let best_response_table = (0..n)
        .map(|j| BestResponseEntry {
            mu_j: table.mus[j],
            mu_i_star: table.mus[table.best_index(j)],
        })
        .collect();
    PneResult {
        family: grid.family,
        reward: grid.config.reward,
        grid_step: grid.step(),
        grid_points: n,
        equilibria,
        best_response_table,
    }
}

/// Check that each equilibrium `(μ₁, μ₂)` survives bisection of the grid:
/// on the refined grid the best response to either coordinate lies within
/// one refined step of the other.
pub fn survives_refinement(
    grid: &FrontierGrid,
    result: &PneResult,
    quad: &QuadratureSpec,
) -> Result<bool> {
    let fine = grid.refined();
    let tol = fine.step() + 1e-12;
    for &(m1, m2) in &result.equilibria {
        let br_to_m2 = best_response(&fine, m2, quad)?;
        let br_to_m1 = best_response(&fine, m1, quad)?;
        if (br_to_m2 - m1).abs() > tol || (br_to_m1 - m2).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::model::NormalEquations;
use crate::error::{Error, Result};
use crate::exec;
use crate::game::{round_payoffs, GameConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentSpec {
    pub lambda_grid: Vec<f64>,
    pub test_fraction: f64,
    pub repetitions: usize,
    pub reward: f64,
    pub seed: u64,
    /// Train both players on the same half instead of disjoint halves.
    #[serde(default)]
    pub shared_split: bool,
}

impl TournamentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if self.lambda_grid.is_empty() {
            return bad("lambda_grid", "grid is empty");
        }
        if self
            .lambda_grid
            .iter()
            .any(|l| !(*l >= 0.0 && l.is_finite()))
        {
            return bad("lambda_grid", "values must be finite and >= 0");
        }
        if self.lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("lambda_grid", "values must be strictly increasing");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction", "must lie in (0, 1)");
        }
        if self.repetitions == 0 {
            return bad("repetitions", "must be at least 1");
        }
        GameConfig::with_reward(self.reward).map(|_| ())
    }
}

/// Summed utilities indexed `[λ₁ index][λ₂ index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub grid: Vec<f64>,
    pub player1: Vec<Vec<f64>>,
    pub player2: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    /// Share of adjacent own-λ steps along which player 1's total does not rise.
    pub player1_nonincreasing: f64,
    pub player2_nonincreasing: f64,
    /// Player 1's gain from the lowest over the highest own λ, against the
    /// lowest-λ opponent.
    pub gain_vs_low_opponent: f64,
    /// The same gain against the highest-λ opponent.
    pub gain_vs_high_opponent: f64,
}

impl TrendReport {
    pub fn passes(&self, min_fraction: f64) -> bool {
        self.player1_nonincreasing >= min_fraction
            && self.player2_nonincreasing >= min_fraction
            && self.gain_vs_high_opponent > self.gain_vs_low_opponent
    }
}

impl PayoffMatrix {
    fn zeros(grid: &[f64]) -> Self {
        let l = grid.len();
        Self {
            grid: grid.to_vec(),
            player1: vec![vec![0.0; l]; l],
            player2: vec![vec![0.0; l]; l],
        }
    }

    fn add(&mut self, other: &PayoffMatrix) {
        for (mine, theirs) in [
            (&mut self.player1, &other.player1),
            (&mut self.player2, &other.player2),
        ] {
            for (r, o) in mine.iter_mut().zip(theirs) {
                for (v, w) in r.iter_mut().zip(o) {
                    *v += w;
                }
            }
        }
    }

    pub fn trend(&self) -> TrendReport {
        let l = self.grid.len();
        let mut down = [0usize; 2];
        let mut total = 0usize;
        for fixed in 0..l {
            for k in 1..l {
                total += 1;
                if self.player1[k][fixed] <= self.player1[k - 1][fixed] {
                    down[0] += 1;
                }
                if self.player2[fixed][k] <= self.player2[fixed][k - 1] {
                    down[1] += 1;
                }
            }
        }
        let frac = |d: usize| {
            if total == 0 {
                1.0
            } else {
                d as f64 / total as f64
            }
        };
        let gain = |j: usize| self.player1[0][j] - self.player1[l - 1][j];
        TrendReport {
            player1_nonincreasing: frac(down[0]),
            player2_nonincreasing: frac(down[1]),
            gain_vs_low_opponent: gain(0),
            gain_vs_high_opponent: gain(l - 1),
        }
    }

    /// One player's matrix as CSV: a header row of λ₂ values, then one row
    /// per λ₁ led by its value.
    pub fn write_csv<W: Write>(&self, player: usize, out: W) -> Result<()> {
        let m = match player {
            1 => &self.player1,
            2 => &self.player2,
            _ => {
                return Err(Error::InvalidParameter {
                    name: "player",
                    reason: format!("must be 1 or 2, got {player}"),
                })
            }
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["lambda1\\lambda2".to_string()];
        header.extend(self.grid.iter().map(f64::to_string));
        w.write_record(&header)?;
        for (lam, row) in self.grid.iter().zip(m) {
            let mut rec = vec![lam.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Test-set prediction errors `ŷ − y` for every grid λ, `[λ][test point]`.
fn errors_on_grid(
    data: &Dataset,
    train: &[usize],
    test: &[usize],
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let eq = NormalEquations::from_rows(data, train);
    let x = data.features().select_rows(test);
    grid.iter()
        .map(|&lam| {
            let w = nalgebra::DVector::from_vec(eq.solve(lam)?.weights);
            let pred = &x * w;
            Ok(test
                .iter()
                .enumerate()
                .map(|(t, &row)| pred[t] - data.labels()[row])
                .collect())
        })
        .collect()
}

fn repetition(data: &Dataset, spec: &TournamentSpec, rep: usize) -> Result<PayoffMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(rep as u64);
    let n = data.rows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let n_test = (spec.test_fraction * n as f64).floor() as usize;
    let (test, rest) = idx.split_at(n_test);
    let half = rest.len() / 2;
    let (a, b) = if spec.shared_split {
        (&rest[..half], &rest[..half])
    } else {
        (&rest[..half], &rest[half..2 * half])
    };

    let e1 = errors_on_grid(data, a, test, &spec.lambda_grid)?;
    let e2 = errors_on_grid(data, b, test, &spec.lambda_grid)?;
    let config = GameConfig::with_reward(spec.reward)?;
    let mut out = PayoffMatrix::zeros(&spec.lambda_grid);
    for (i, r1) in e1.iter().enumerate() {
        for (j, r2) in e2.iter().enumerate() {
            let (mut s1, mut s2) = (0.0, 0.0);
            for (&x1, &x2) in r1.iter().zip(r2) {
                // split-expected ties never consult the rng
                let o = round_payoffs(x1, x2, &config, &mut rng);
                s1 += o.payoffs.0;
                s2 += o.payoffs.1;
            }
            out.player1[i][j] = s1;
            out.player2[i][j] = s2;
        }
    }
    Ok(out)
}

/// Repeatedly split off a test set, train both players on halves of the
/// remainder at every grid λ, and sum game payoffs over test points and
/// repetitions. Repetition `r` draws its split from stream `r` of the seed.
pub fn tournament(data: &Dataset, spec: &TournamentSpec) -> Result<PayoffMatrix> {
    spec.validate()?;
    let n = data.rows();
    let n_test = (spec.test_fraction * n as f64).floor() as usize;
    let needed_train = if spec.shared_split { 1 } else { 2 };
    if n_test == 0 || n - n_test < needed_train {
        return Err(Error::InsufficientRows {
            rows: n,
            needed: ((needed_train + 1) as f64 / (1.0 - spec.test_fraction))
                .max(1.0 / spec.test_fraction)
                .ceil() as usize,
        });
    }
    let per_rep = exec::map_range(spec.repetitions, |r| repetition(data, spec, r));
    let mut total = PayoffMatrix::zeros(&spec.lambda_grid);
    for m in per_rep {
        total.add(&m?);
    }
    Ok(total)
}

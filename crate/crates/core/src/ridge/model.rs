use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Reciprocal condition number below which an unpenalized Gram matrix is
/// treated as singular.
const RCOND_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub lambda: f64,
}

impl RidgeModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        predict(self, x)
    }
}

/// Sample moments `G = XᵀX/n` and `b = Xᵀy/n` of a training set. One set of
/// moments serves every λ on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    pub gram: DMatrix<f64>,
    pub moment: DVector<f64>,
}

impl NormalEquations {
    pub fn new(data: &Dataset) -> Self {
        let n = data.rows() as f64;
        let x = data.features();
        Self {
            gram: x.tr_mul(x) / n,
            moment: x.tr_mul(data.labels()) / n,
        }
    }

    /// Moments over the listed rows only.
    pub fn from_rows(data: &Dataset, rows: &[usize]) -> Self {
        let x = data.features().select_rows(rows);
        let y = data.labels().select_rows(rows);
        let n = rows.len() as f64;
        Self {
            gram: x.tr_mul(&x) / n,
            moment: x.tr_mul(&y) / n,
        }
    }

    /// Solve `(G + λI) w = b`.
    pub fn solve(&self, lambda: f64) -> Result<RidgeModel> {
        let w = solve_shifted(&self.gram, &self.moment, lambda)?;
        Ok(RidgeModel {
            weights: w.as_slice().to_vec(),
            lambda,
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must be finite and >= 0, got {lambda}"),
        })
    }
}

fn is_ill_conditioned(gram: &DMatrix<f64>) -> bool {
    let eig = gram.clone().symmetric_eigen().eigenvalues;
    let max = eig.iter().copied().fold(0.0, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    !(max > 0.0) || min <= RCOND_FLOOR * max
}

/// Solve `(G + λI) x = rhs` for symmetric positive semidefinite `G`.
/// Cholesky first; a pivoted LU covers the unpenalized case when Cholesky
/// breaks down on a barely-definite matrix.
fn solve_shifted(gram: &DMatrix<f64>, rhs: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_lambda(lambda)?;
    let p = gram.nrows();
    if gram.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: gram.ncols(),
        });
    }
    if rhs.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: rhs.len(),
        });
    }
    if lambda == 0.0 && is_ill_conditioned(gram) {
        return Err(Error::SingularSystem { lambda });
    }
    let shifted = gram + DMatrix::identity(p, p) * lambda;
    if let Some(chol) = shifted.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    shifted
        .full_piv_lu()
        .solve(rhs)
        .ok_or(Error::SingularSystem { lambda })
}

/// `ŵ = (XᵀX/n + λI)⁻¹ Xᵀy/n`.
pub fn fit_ridge(train: &Dataset, lambda: f64) -> Result<RidgeModel> {
    NormalEquations::new(train).solve(lambda)
}

/// `ŵᵀx`.
pub fn predict(model: &RidgeModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            got: x.len(),
        });
    }
    Ok(model.weights.iter().zip(x).map(|(w, v)| w * v).sum())
}

/// Large-sample bias and variance of the prediction at `x`:
/// `bias = λ·xᵀ(G + λI)⁻¹w0` and `V = σ²·xᵀ(G + λI)⁻¹G(G + λI)⁻¹x`.
pub fn asymptotic_bias_variance(
    gram: &DMatrix<f64>,
    w0: &DVector<f64>,
    x: &DVector<f64>,
    sigma2: f64,
    lambda: f64,
) -> Result<(f64, f64)> {
    if w0.len() != gram.nrows() || x.len() != gram.nrows() {
        return Err(Error::DimensionMismatch {
            expected: gram.nrows(),
            got: if w0.len() != gram.nrows() {
                w0.len()
            } else {
                x.len()
            },
        });
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma2",
            reason: format!("must be >= 0, got {sigma2}"),
        });
    }
    // (G + λI) is symmetric, so xᵀ(G+λI)⁻¹ = ((G+λI)⁻¹x)ᵀ
    let u = solve_shifted(gram, x, lambda)?;
    let bias = lambda * u.dot(w0);
    let variance = sigma2 * u.dot(&(gram * &u));
    Ok((bias, variance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn line(n: usize) -> Dataset {
        let x: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        Dataset::new(DMatrix::from_column_slice(n, 1, &x), DVector::from_vec(y)).unwrap()
    }

    #[test]
    fn interpolates_noise_free_line() {
        let m = fit_ridge(&line(10), 0.0).unwrap();
        assert_abs_diff_eq!(m.weights[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.predict(&[3.0]).unwrap(), 6.0, epsilon = 1e-9);
        let heavy = fit_ridge(&line(10), 1e9).unwrap();
        assert!(heavy.weights[0].abs() < 1e-8);
    }

    #[test]
    fn prediction_is_inner_product() {
        let zero = RidgeModel {
            weights: vec![0.0; 3],
            lambda: 1.0,
        };
        assert_eq!(zero.predict(&[4.0, -2.0, 9.0]).unwrap(), 0.0);
        let e1 = RidgeModel {
            weights: vec![0.0, 1.0, 0.0],
            lambda: 1.0,
        };
        assert_eq!(e1.predict(&[4.0, -2.0, 9.0]).unwrap(), -2.0);
        assert!(matches!(
            e1.predict(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn rank_deficient_gram_needs_a_penalty() {
        // duplicated column
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
        let d = Dataset::new(x, DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!(matches!(
            fit_ridge(&d, 0.0),
            Err(Error::SingularSystem { .. })
        ));
        let m = fit_ridge(&d, 0.1).unwrap();
        assert_abs_diff_eq!(m.weights[0], m.weights[1], epsilon = 1e-12);
        assert!(fit_ridge(&d, -1.0).is_err());
    }

    #[test]
    fn scalar_bias_variance() {
        let g = DMatrix::identity(1, 1);
        let e = DVector::from_vec(vec![1.0]);
        for &lam in &[0.0, 0.5, 3.0] {
            let (b, v) = asymptotic_bias_variance(&g, &e, &e, 1.0, lam).unwrap();
            assert_abs_diff_eq!(b, lam / (1.0 + lam), epsilon = 1e-15);
            assert_abs_diff_eq!(v, 1.0 / (1.0 + lam).powi(2), epsilon = 1e-15);
        }
    }
}

use crate::linalg::{lstsq_qr, Matrix};

use super::{check_columns, sse, ModelError};

/// `y = intercept + sum(coef_j * x_j) + e`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    /// `(column name, coefficient)` in design-matrix order.
    pub coefficients: Vec<(String, f64)>,
    /// Unbiased estimate of the error variance, `SSE / (n - p - 1)`.
    pub residual_variance: f64,
}

impl LinearModel {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, c)| c)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        check_columns(self.coefficients.len(), x)?;
        Ok((0..x.rows())
            .map(|i| {
                self.intercept
                    + x.row(i)
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(v, (_, c))| v * c)
                        .sum::<f64>()
            })
            .collect())
    }
}

/// Least-squares fit with an intercept, solved by Householder QR on the
/// augmented `[1 | X]` matrix.
pub fn fit_ols(x: &Matrix, y: &[f64], names: &[String]) -> Result<LinearModel, ModelError> {
    if names.len() != x.cols() {
        return Err(ModelError::DimensionMismatch {
            expected: x.cols(),
            got: names.len(),
        });
    }
    if y.len() != x.rows() {
        return Err(ModelError::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    let params = x.cols() + 1;
    if x.rows() <= params {
        return Err(ModelError::Underdetermined {
            rows: x.rows(),
            params,
        });
    }

    let mut augmented = Matrix::zeros(x.rows(), params);
    for i in 0..x.rows() {
        augmented[(i, 0)] = 1.0;
        for j in 0..x.cols() {
            augmented[(i, j + 1)] = x[(i, j)];
        }
    }
    let beta = lstsq_qr(&augmented, y).map_err(|col| {
        ModelError::RankDeficient(if col == 0 {
            "intercept".to_string()
        } else {
            names[col - 1].clone()
        })
    })?;

    let mut model = LinearModel {
        intercept: beta[0],
        coefficients: names.iter().cloned().zip(beta[1..].iter().copied()).collect(),
        residual_variance: 0.0,
    };
    let fitted = model.predict(x)?;
    model.residual_variance = sse(y, &fitted) / (x.rows() - params) as f64;
    Ok(model)
}

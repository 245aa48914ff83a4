//! Regression models: ordinary least squares (also used for the three-factor
//! fit), CART regression trees, random forests and gradient boosting.
//!
//! All trainers are deterministic given data, hyperparameters and seed.

mod boost;
mod factor;
mod forest;
mod format;
mod ols;
mod tree;

pub use boost::{fit_gradient_boost, BoostModel, BoostParams};
pub use factor::{fit_fama_french, FactorFit};
pub use forest::{fit_random_forest, tree_rng, ForestModel, ForestParams};
pub use format::{FormatError, FORMAT_VERSION};
pub use ols::{fit_ols, LinearModel};
pub use tree::{fit_tree, Node, RegressionTree, TreeParams};

use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("column `{0}` is linearly dependent on the preceding columns")]
    RankDeficient(String),
    #[error("{rows} rows are too few for {params} parameters")]
    Underdetermined { rows: usize, params: usize },
    #[error("{rows} rows are too few for min_leaf = {min_leaf}")]
    TooFewRows { rows: usize, min_leaf: usize },
    #[error("expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParameter(String),
    #[error("unknown ticker `{0}`")]
    UnknownTicker(String),
    #[error("factor axes do not line up with the return matrix")]
    MisalignedAxes,
}

/// A trained model of any of the three kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Linear(LinearModel),
    Forest(ForestModel),
    Boost(BoostModel),
}

impl FittedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            FittedModel::Linear(_) => "linear",
            FittedModel::Forest(_) => "forest",
            FittedModel::Boost(_) => "boost",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            FittedModel::Linear(m) => m.coefficients.len(),
            FittedModel::Forest(m) => m.n_features,
            FittedModel::Boost(m) => m.n_features,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        match self {
            FittedModel::Linear(m) => m.predict(x),
            FittedModel::Forest(m) => m.predict(x),
            FittedModel::Boost(m) => m.predict(x),
        }
    }

    pub fn to_text(&self) -> String {
        format::write_model(self)
    }

    pub fn from_text(text: &str) -> Result<Self, FormatError> {
        format::read_model(text)
    }
}

pub fn predict(model: &FittedModel, x: &Matrix) -> Result<Vec<f64>, ModelError> {
    model.predict(x)
}

pub(crate) fn check_columns(expected: usize, x: &Matrix) -> Result<(), ModelError> {
    if x.cols() == expected {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch {
            expected,
            got: x.cols(),
        })
    }
}

/// Sum of squared differences.
pub fn sse(y: &[f64], yhat: &[f64]) -> f64 {
    y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum()
}

use crate::linalg::Matrix;

use super::forest::tree_rng;
use super::{check_columns, fit_tree, sse, ModelError, RegressionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_leaf: 2,
            seed: 42,
        }
    }
}

/// `f(x) = initial + learning_rate * sum_k tree_k(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostModel {
    pub initial: f64,
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
    pub n_features: usize,
    /// Training SSE before the first stage and after each stage.
    pub sse_trace: Vec<f64>,
}

impl BoostModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        check_columns(self.n_features, x)?;
        let mut out = vec![self.initial; x.rows()];
        for tree in &self.trees {
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.learning_rate * tree.predict_row(x.row(i));
            }
        }
        Ok(out)
    }
}

/// Least-squares gradient boosting: each stage fits a tree to the current
/// residuals and adds it with a constant learning rate.
pub fn fit_gradient_boost(
    x: &Matrix,
    y: &[f64],
    params: &BoostParams,
) -> Result<BoostModel, ModelError> {
    let lr = params.learning_rate;
    if !(lr > 0.0 && lr <= 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "learning rate {lr} is outside (0, 1]"
        )));
    }
    if y.is_empty() || y.len() != x.rows() {
        return Err(ModelError::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    let initial = y.iter().sum::<f64>() / y.len() as f64;
    let mut fitted = vec![initial; y.len()];
    let mut sse_trace = vec![sse(y, &fitted)];
    let mut trees = Vec::with_capacity(params.stages);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        mtry: None,
    };
    for stage in 0..params.stages {
        let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let tree = fit_tree(x, &residuals, tree_params, &mut tree_rng(params.seed, stage))?;
        for (i, f) in fitted.iter_mut().enumerate() {
            *f += lr * tree.predict_row(x.row(i));
        }
        sse_trace.push(sse(y, &fitted));
        trees.push(tree);
    }
    Ok(BoostModel {
        initial,
        trees,
        learning_rate: lr,
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        seed: params.seed,
        n_features: x.cols(),
        sse_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth(n: usize) -> (Matrix, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 * 6.0).collect();
        let y = xs.iter().map(|v| v.sin() * 2.0 + 0.3 * v).collect();
        (Matrix::from_rows(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>()), y)
    }

    #[test]
    fn zero_stages_is_mean_predictor() {
        let (x, y) = smooth(30);
        let m = fit_gradient_boost(&x, &y, &BoostParams { stages: 0, ..Default::default() }).unwrap();
        let mean = y.iter().sum::<f64>() / 30.0;
        assert!(m.predict(&x).unwrap().iter().all(|&p| p == mean));
        let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        assert_eq!(m.sse_trace, vec![sst]);
    }

    #[test]
    fn one_stage_full_rate() {
        let (x, y) = smooth(30);
        let m = fit_gradient_boost(
            &x,
            &y,
            &BoostParams { stages: 1, learning_rate: 1.0, ..Default::default() },
        )
        .unwrap();
        let tree = &m.trees[0];
        let preds = m.predict(&x).unwrap();
        for i in 0..30 {
            assert_eq!(preds[i], m.initial + tree.predict_row(x.row(i)));
        }
    }

    #[test]
    fn smooth_fit_descends() {
        let (x, y) = smooth(80);
        let m = fit_gradient_boost(
            &x,
            &y,
            &BoostParams { stages: 50, learning_rate: 0.1, ..Default::default() },
        )
        .unwrap();
        assert_eq!(m.sse_trace.len(), 51);
        assert!(m.sse_trace.windows(2).all(|w| w[1] <= w[0]), "{:?}", m.sse_trace);
        assert!(*m.sse_trace.last().unwrap() < 0.1 * m.sse_trace[0]);
    }

    #[test]
    fn small_learning_rate_stays_near_mean() {
        let (x, y) = smooth(40);
        let mean = y.iter().sum::<f64>() / 40.0;
        let mut previous = f64::INFINITY;
        for lr in [1e-1, 1e-2, 1e-3, 1e-4] {
            let m = fit_gradient_boost(
                &x,
                &y,
                &BoostParams { stages: 10, learning_rate: lr, ..Default::default() },
            )
            .unwrap();
            let dev = m
                .predict(&x)
                .unwrap()
                .iter()
                .map(|p| (p - mean).abs())
                .fold(0.0, f64::max);
            assert!(dev < previous);
            previous = dev;
        }
        assert!(previous < 1e-2);
    }

    #[test]
    fn rejects_bad_rate() {
        let (x, y) = smooth(10);
        for lr in [0.0, -0.1, 1.5, f64::NAN] {
            let p = BoostParams { learning_rate: lr, ..Default::default() };
            assert!(matches!(
                fit_gradient_boost(&x, &y, &p),
                Err(ModelError::InvalidParameter(_))
            ));
        }
    }
}

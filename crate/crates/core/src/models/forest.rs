use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::Matrix;

use super::tree::fit_tree_on_rows;
use super::{check_columns, ModelError, RegressionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// `None` means `ceil(p / 3)`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: 6,
            min_leaf: 2,
            mtry: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub mtry: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub n_features: usize,
}

impl ForestModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        check_columns(self.n_features, x)?;
        let b = self.trees.len() as f64;
        Ok((0..x.rows())
            .map(|i| {
                let row = x.row(i);
                self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / b
            })
            .collect())
    }
}

/// Generator for tree `index` of a forest seeded with `seed`: the master
/// seed selects the key and the tree index selects the ChaCha stream.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Bagged ensemble of CART trees; prediction is the plain mean of the trees.
/// Trees train in parallel and match serial training exactly because each
/// owns a pre-derived generator.
pub fn fit_random_forest(
    x: &Matrix,
    y: &[f64],
    params: &ForestParams,
) -> Result<ForestModel, ModelError> {
    if params.trees == 0 {
        return Err(ModelError::InvalidParameter("forest needs at least one tree".into()));
    }
    let p = x.cols();
    let mtry = params.mtry.unwrap_or(p.div_ceil(3)).clamp(1, p.max(1));
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        mtry: Some(mtry),
    };
    let n = x.rows();
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|b| {
            let mut rng = tree_rng(params.seed, b);
            let rows: Vec<usize> = if params.bootstrap {
                let mut draw: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n.max(1))).collect();
                draw.sort_unstable();
                draw
            } else {
                (0..n).collect()
            };
            fit_tree_on_rows(x, y, &rows, tree_params, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ForestModel {
        trees,
        mtry,
        bootstrap: params.bootstrap,
        seed: params.seed,
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        n_features: p,
    })
}

use rand::seq::index::sample;
use rand::Rng;

use crate::linalg::Matrix;

use super::{check_columns, ModelError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; `None` scans all of them in index order.
    pub mtry: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        samples: usize,
    },
}

/// CART regression tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub n_features: usize,
}

impl RegressionTree {
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
                Node::Leaf { .. } => return at,
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        check_columns(self.n_features, x)?;
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Relative margin, against the node's SSE, by which a candidate split
/// must beat the current best.
pub const TIE_TOLERANCE: f64 = 1e-12;

struct Builder<'a, R> {
    x: &'a Matrix,
    y: &'a [f64],
    params: TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let value = rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf {
            value,
            samples: rows.len(),
        });
        self.nodes.len() - 1
    }

    fn features(&mut self) -> Vec<usize> {
        let p = self.x.cols();
        match self.params.mtry {
            Some(m) if m < p => {
                let mut f = sample(self.rng, p, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<BestSplit> {
        let n = rows.len();
        let min_leaf = self.params.min_leaf;
        let mean = rows.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        let total: f64 = rows.iter().map(|&i| self.y[i] - mean).sum();
        let parent = total * total / n as f64;
        // Gains within rounding noise of each other count as ties.
        let node_sse: f64 = rows.iter().map(|&i| (self.y[i] - mean).powi(2)).sum();
        let eps = TIE_TOLERANCE * node_sse;

        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        for feature in self.features() {
            pairs.clear();
            pairs.extend(rows.iter().map(|&i| (self.x[(i, feature)], self.y[i] - mean)));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for k in 1..n {
                left_sum += pairs[k - 1].1;
                if k < min_leaf || n - k < min_leaf || pairs[k - 1].0 >= pairs[k].0 {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / k as f64
                    + right_sum * right_sum / (n - k) as f64
                    - parent;
                if gain > best.as_ref().map_or(0.0, |b| b.gain) + eps {
                    let (lo, hi) = (pairs[k - 1].0, pairs[k].0);
                    let mid = 0.5 * (lo + hi);
                    best = Some(BestSplit {
                        feature,
                        threshold: if mid < hi { mid } else { lo },
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            return self.leaf(rows);
        }
        let Some(split) = self.best_split(rows) else {
            return self.leaf(rows);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.x[(i, split.feature)] <= split.threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: 0.0,
            samples: 0,
        });
        let left = self.grow(&left_rows, depth + 1);
        let right = self.grow(&right_rows, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Grows a tree on the listed rows (repeats allowed, as in a bootstrap
/// resample). Splits maximize SSE reduction over midpoints between
/// consecutive distinct feature values; ties keep the lowest feature, then
/// the lowest threshold.
pub fn fit_tree_on_rows<R: Rng>(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    params: TreeParams,
    rng: &mut R,
) -> Result<RegressionTree, ModelError> {
    if params.min_leaf == 0 {
        return Err(ModelError::InvalidParameter("min_leaf must be at least 1".into()));
    }
    if params.mtry == Some(0) {
        return Err(ModelError::InvalidParameter("mtry must be at least 1".into()));
    }
    if y.len() != x.rows() {
        return Err(ModelError::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if rows.len() < 2 * params.min_leaf {
        return Err(ModelError::TooFewRows {
            rows: rows.len(),
            min_leaf: params.min_leaf,
        });
    }
    let mut builder = Builder {
        x,
        y,
        params,
        rng,
        nodes: Vec::new(),
    };
    builder.grow(rows, 0);
    Ok(RegressionTree {
        nodes: builder.nodes,
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        n_features: x.cols(),
    })
}

pub fn fit_tree<R: Rng>(
    x: &Matrix,
    y: &[f64],
    params: TreeParams,
    rng: &mut R,
) -> Result<RegressionTree, ModelError> {
    let rows: Vec<usize> = (0..x.rows()).collect();
    fit_tree_on_rows(x, y, &rows, params, rng)
}

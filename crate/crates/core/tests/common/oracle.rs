//! Reference implementations written independently of the library.

/// Least squares with intercept via the normal equations `(A'A) b = A'y`,
/// `A = [1 | X]`, solved by Gaussian elimination with partial pivoting.
/// Returns `[intercept, b1, ..., bp]`.
pub fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = rows[0].len() + 1;
    let aug = |r: &[f64], j: usize| if j == 0 { 1.0 } else { r[j - 1] };
    let mut m = vec![vec![0.0; p + 1]; p];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                m[i][j] += aug(r, i) * aug(r, j);
            }
            m[i][p] += aug(r, i) * yi;
        }
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for row in col + 1..p {
            let f = m[row][col] / m[col][col];
            for j in col..=p {
                m[row][j] -= f * m[col][j];
            }
        }
    }
    let mut b = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| m[i][j] * b[j]).sum();
        b[i] = (m[i][p] - s) / m[i][i];
    }
    b
}

/// Exhaustive CART on integer targets. Gains are compared exactly as
/// rationals, so ties resolve by the stated rule (lowest feature, then
/// lowest threshold) without rounding noise.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleTree {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleTree>,
        right: Box<OracleTree>,
    },
}

impl OracleTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            OracleTree::Leaf(v) => *v,
            OracleTree::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }
}

/// Gain as the fraction `num / den` with
/// `gain = S_l^2/n_l + S_r^2/n_r - S^2/n`.
fn gain(sl: i128, nl: i128, sr: i128, nr: i128) -> (i128, i128) {
    let (s, n) = (sl + sr, nl + nr);
    let num = sl * sl * nr * n + sr * sr * nl * n - s * s * nl * nr;
    (num, nl * nr * n)
}

fn greater(a: (i128, i128), b: (i128, i128)) -> bool {
    a.0 * b.1 > b.0 * a.1
}

pub fn oracle_tree(x: &[Vec<f64>], y: &[i64], rows: &[usize], depth: usize, max_depth: usize, min_leaf: usize) -> OracleTree {
    let leaf = || {
        let s: i64 = rows.iter().map(|&i| y[i]).sum();
        OracleTree::Leaf(s as f64 / rows.len() as f64)
    };
    if depth >= max_depth || rows.len() < 2 * min_leaf {
        return leaf();
    }
    let mut best: Option<((i128, i128), usize, f64)> = None;
    for f in 0..x[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|&i| x[i][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] <= threshold);
            if l.len() < min_leaf || r.len() < min_leaf {
                continue;
            }
            let sum = |v: &[usize]| v.iter().map(|&i| y[i] as i128).sum::<i128>();
            let g = gain(sum(&l), l.len() as i128, sum(&r), r.len() as i128);
            let beats = match &best {
                None => g.0 > 0,
                Some((b, _, _)) => greater(g, *b),
            };
            if beats {
                best = Some((g, f, threshold));
            }
        }
    }
    match best {
        None => leaf(),
        Some((_, feature, threshold)) => {
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| x[i][feature] <= threshold);
            OracleTree::Split {
                feature,
                threshold,
                left: Box::new(oracle_tree(x, y, &l, depth + 1, max_depth, min_leaf)),
                right: Box::new(oracle_tree(x, y, &r, depth + 1, max_depth, min_leaf)),
            }
        }
    }
}

/// Renumbers labels in order of first appearance, so equal partitions get
/// equal label vectors.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(i) => i,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect()
}

/// Within-cluster sum of squares of a labelled partition, computed from
/// group means in canonical label order.
pub fn partition_wcss(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let labels = &canonical_labels(labels)[..];
    let groups = labels.iter().max().map_or(0, |m| m + 1);
    let dim = points[0].len();
    let mut total = 0.0;
    for g in 0..groups {
        let members: Vec<&Vec<f64>> = points
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == g)
            .map(|(p, _)| p)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mean: Vec<f64> = (0..dim)
            .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64)
            .collect();
        for p in members {
            total += p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
    }
    total
}

/// Minimum WCSS over every split of the points into two non-empty groups.
/// Point 0 is pinned to group 0 so each split is visited once.
pub fn best_two_partition(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    (1..(1u32 << (n - 1)))
        .map(|mask| {
            let labels: Vec<usize> = (0..n)
                .map(|i| if i > 0 && mask & (1 << (i - 1)) != 0 { 1 } else { 0 })
                .collect();
            partition_wcss(points, &labels)
        })
        .fold(f64::INFINITY, f64::min)
}

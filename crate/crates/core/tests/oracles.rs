mod common;

use djia_factors::clustering::{lloyd, wcss};
use djia_factors::linalg::Matrix;
use djia_factors::models::{fit_ols, fit_tree, TreeParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::fixtures::{ols_system, tree_fixture, two_blob_fixture};
use common::oracle::{best_two_partition, normal_equations, oracle_tree, partition_wcss};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ols_agrees_with_normal_equations(seed in any::<u64>(), n in 12usize..80, p in 1usize..6) {
        let (rows, y) = ols_system(seed, n, p);
        let fit = fit_ols(&Matrix::from_rows(&rows), &y, &names(p)).unwrap();
        let oracle = normal_equations(&rows, &y);
        prop_assert!((fit.intercept - oracle[0]).abs() < 1e-8);
        for (j, (_, c)) in fit.coefficients.iter().enumerate() {
            prop_assert!((c - oracle[j + 1]).abs() < 1e-8);
        }
    }

    #[test]
    fn tree_agrees_with_exhaustive_search(seed in any::<u64>(), depth in 0usize..=3, min_leaf in 1usize..=3) {
        let (x, yi) = tree_fixture(seed);
        let y: Vec<f64> = yi.iter().map(|&v| v as f64).collect();
        let params = TreeParams { max_depth: depth, min_leaf, mtry: None };
        let tree = fit_tree(&Matrix::from_rows(&x), &y, params, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let rows: Vec<usize> = (0..8).collect();
        let oracle = oracle_tree(&x, &yi, &rows, 0, depth, min_leaf);
        for a in 0..=10 {
            for b in 0..=10 {
                let probe = [a as f64 * 0.25 - 0.1, b as f64 * 0.25 - 0.1];
                prop_assert_eq!(tree.predict_row(&probe).to_bits(), oracle.predict(&probe).to_bits());
            }
        }
    }

    #[test]
    fn best_pair_start_reaches_two_partition_optimum(seed in any::<u64>()) {
        let points = two_blob_fixture(seed);
        let optimum = best_two_partition(&points);
        let mut best: Option<(f64, Vec<usize>)> = None;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let fit = lloyd(&points, vec![points[i].clone(), points[j].clone()], 100, 0.0);
                if best.as_ref().is_none_or(|b| fit.wcss < b.0) {
                    best = Some((fit.wcss, fit.assignments));
                }
            }
        }
        let (reported, labels) = best.unwrap();
        prop_assert_eq!(partition_wcss(&points, &labels), optimum);
        prop_assert!((reported - optimum).abs() <= 1e-9 * optimum.max(1.0));
    }
}

#[test]
fn oracle_wcss_matches_library_wcss() {
    let points = two_blob_fixture(3);
    let labels = [0, 0, 1, 1, 0, 1, 0, 1];
    let centroids: Vec<Vec<f64>> = (0..2)
        .map(|g| {
            let m: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == g).map(|(p, _)| p).collect();
            (0..2).map(|d| m.iter().map(|p| p[d]).sum::<f64>() / m.len() as f64).collect()
        })
        .collect();
    let lib = wcss(&points, &centroids, &labels);
    assert!((lib - partition_wcss(&points, &labels)).abs() < 1e-9);
}

#[test]
fn tree_oracle_handles_degenerate_fixtures() {
    let x = vec![vec![1.0, 1.0]; 8];
    let y = [1, 2, 3, 4, 5, 6, 7, 8];
    let rows: Vec<usize> = (0..8).collect();
    assert_eq!(oracle_tree(&x, &y, &rows, 0, 2, 1).predict(&[1.0, 1.0]), 4.5);
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let tree = fit_tree(
        &Matrix::from_rows(&x),
        &yf,
        TreeParams { max_depth: 2, min_leaf: 1, mtry: None },
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap();
    assert_eq!(tree.nodes.len(), 1);
}


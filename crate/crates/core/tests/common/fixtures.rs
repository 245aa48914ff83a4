//! Seeded fixture families for the oracle comparisons.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use djia_factors::features::{FactorSeries, ReturnMatrix};

use super::normal;

/// Well-conditioned `n x p` system with standard normal features and a
/// noisy linear target.
pub fn ols_system(seed: u64, n: usize, p: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<f64> = (0..=p).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| normal(&mut rng)).collect())
        .collect();
    let y = rows
        .iter()
        .map(|r| beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>() + 0.5 * normal(&mut rng))
        .collect();
    (rows, y)
}

/// Eight rows, two features on a small grid, integer targets. Small grids
/// force repeated feature values and tied gains.
pub fn tree_fixture(seed: u64) -> (Vec<Vec<f64>>, Vec<i64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = rng.gen_range(1..=5);
    let x: Vec<Vec<f64>> = (0..8)
        .map(|_| {
            (0..2)
                .map(|_| rng.gen_range(0..levels) as f64 * 0.5)
                .collect()
        })
        .collect();
    let spread = rng.gen_range(0..=4);
    let y = (0..8).map(|_| rng.gen_range(-spread..=spread)).collect();
    (x, y)
}

/// Eight 2-D points in two separated blobs; each blob has at least one point.
pub fn two_blob_fixture(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let gap = rng.gen_range(6.0..15.0);
    let b = [a[0] + gap * angle.cos(), a[1] + gap * angle.sin()];
    let in_a = rng.gen_range(1..8);
    (0..8)
        .map(|i| {
            let c = if i < in_a { a } else { b };
            vec![c[0] + normal(&mut rng), c[1] + normal(&mut rng)]
        })
        .collect()
}

/// One stock driven by known factor loadings over `weeks` weeks.
pub fn factor_panel(
    seed: u64,
    weeks: usize,
    alpha: f64,
    beta_mkt: f64,
    beta_smb: f64,
    sigma: f64,
) -> (ReturnMatrix, FactorSeries) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = chrono::NaiveDate::from_ymd_opt(2011, 1, 7).unwrap();
    let dates: Vec<chrono::NaiveDate> = (0..weeks)
        .map(|w| start + chrono::Days::new(7 * w as u64))
        .collect();
    let mkt: Vec<f64> = (0..weeks).map(|_| 2.0 * normal(&mut rng)).collect();
    let smb: Vec<f64> = (0..weeks).map(|_| 1.5 * normal(&mut rng)).collect();
    let risk_free: Vec<f64> = (0..weeks).map(|_| rng.gen_range(0.0..0.05)).collect();
    let returns: Vec<f64> = (0..weeks)
        .map(|t| {
            risk_free[t]
                + alpha
                + beta_mkt * (mkt[t] - risk_free[t])
                + beta_smb * smb[t]
                + sigma * normal(&mut rng)
        })
        .collect();
    let r = ReturnMatrix {
        tickers: vec!["SYN".into()],
        dates: dates.clone(),
        quarters: vec![1; weeks],
        values: vec![returns],
    };
    let f = FactorSeries {
        dates,
        mkt: mkt.clone(),
        smb,
        hml: vec![0.0; weeks],
        index_return: mkt,
        total_volume: vec![1e8; weeks],
        risk_free,
    };
    (r, f)
}

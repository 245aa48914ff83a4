//! K-means (Lloyd) clustering of stocks by their weekly return vectors.
//!
//! Distances are squared Euclidean on raw weekly percent changes. Ties in
//! nearest-centroid assignment go to the lowest cluster index, and an empty
//! cluster is reseeded with the point farthest from its current centroid.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::features::ReturnMatrix;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("k = {k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("no data points")]
    EmptyMatrix,
    #[error("restarts must be at least 1")]
    NoRestarts,
    #[error("unknown ticker `{0}`")]
    UnknownTicker(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            k: DEFAULT_K,
            seed: 42,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

/// Outcome of a Lloyd run on raw points.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub wcss: f64,
    /// WCSS after each completed iteration; non-increasing.
    pub wcss_trace: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub tickers: Vec<String>,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster id of each ticker, aligned with `tickers`.
    pub assignments: Vec<usize>,
    pub wcss: f64,
    pub wcss_trace: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
}

impl ClusterModel {
    fn from_fit(r: &ReturnMatrix, k: usize, seed: u64, fit: LloydFit) -> Self {
        ClusterModel {
            k,
            tickers: r.tickers.clone(),
            centroids: fit.centroids,
            assignments: fit.assignments,
            wcss: fit.wcss,
            wcss_trace: fit.wcss_trace,
            iterations: fit.iterations,
            seed,
        }
    }

    pub fn cluster_of(&self, ticker: &str) -> Option<usize> {
        self.tickers
            .iter()
            .position(|t| t == ticker)
            .map(|i| self.assignments[i])
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn means(points: &[Vec<f64>], assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        for v in s.iter_mut() {
            *v /= n as f64;
        }
    }
    sums
}

/// Sum of squared distances from each point to its assigned centroid.
pub fn wcss(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &c)| squared_distance(p, &centroids[c]))
        .sum()
}

/// Moves the farthest point (from its own centroid) of a multi-member
/// cluster into each empty cluster.
fn repair_empty(points: &[Vec<f64>], centroids: &[Vec<f64>], assignments: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignments.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        let mut donor: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[assignments[i]] < 2 {
                continue;
            }
            let d = squared_distance(p, &centroids[assignments[i]]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        match donor {
            Some((i, _)) => assignments[i] = empty,
            None => return,
        }
    }
}

/// Lloyd iteration from explicit initial centroids.
///
/// Stops when assignments repeat, when the WCSS improvement drops below
/// `tol`, or after `max_iter` iterations. A step that would raise WCSS
/// (floating-point noise at a fixed point) is discarded and ends the run.
pub fn lloyd(points: &[Vec<f64>], init: Vec<Vec<f64>>, max_iter: usize, tol: f64) -> LloydFit {
    let k = init.len();
    let mut centroids = init;
    let mut assignments: Vec<usize> = Vec::new();
    let mut current = f64::INFINITY;
    let mut trace = Vec::new();
    let mut iterations = 0;

    while iterations < max_iter.max(1) {
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        repair_empty(points, &centroids, &mut next, k);
        let stable = next == assignments;
        let next_centroids = means(points, &next, k);
        let next_wcss = wcss(points, &next_centroids, &next);
        if next_wcss > current {
            break;
        }
        iterations += 1;
        let improvement = current - next_wcss;
        assignments = next;
        centroids = next_centroids;
        current = next_wcss;
        assert!(
            trace.last().is_none_or(|&prev| current <= prev),
            "WCSS increased inside Lloyd iteration"
        );
        trace.push(current);
        if stable || improvement < tol {
            break;
        }
    }

    LloydFit {
        centroids,
        assignments,
        wcss: current,
        wcss_trace: trace,
        iterations,
    }
}

fn check_k(n: usize, k: usize) -> Result<(), ClusterError> {
    if n == 0 {
        return Err(ClusterError::EmptyMatrix);
    }
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    Ok(())
}

/// Seeded choice of `k` distinct point indices.
pub fn initial_indices(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample(&mut rng, n, k).into_vec()
}

/// One Lloyd run on raw points, initialized from `k` distinct seeded points.
pub fn kmeans_points(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<LloydFit, ClusterError> {
    check_k(points.len(), k)?;
    let init = initial_indices(points.len(), k, seed)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    Ok(lloyd(points, init, max_iter, tol))
}

pub fn kmeans(r: &ReturnMatrix, params: &KMeansParams) -> Result<ClusterModel, ClusterError> {
    let fit = kmeans_points(&r.values, params.k, params.seed, params.max_iter, params.tol)?;
    Ok(ClusterModel::from_fit(r, params.k, params.seed, fit))
}

fn best_of(fits: Vec<LloydFit>) -> LloydFit {
    // Strict comparison keeps the lowest index on ties.
    fits.into_iter()
        .reduce(|best, f| if f.wcss < best.wcss { f } else { best })
        .expect("at least one fit")
}

/// Best of `restarts` runs with seeds `seed + r`, evaluated in parallel.
pub fn kmeans_restarts(
    r: &ReturnMatrix,
    params: &KMeansParams,
    restarts: usize,
) -> Result<ClusterModel, ClusterError> {
    if restarts == 0 {
        return Err(ClusterError::NoRestarts);
    }
    check_k(r.values.len(), params.k)?;
    let fits: Vec<LloydFit> = (0..restarts as u64)
        .into_par_iter()
        .map(|i| {
            kmeans_points(
                &r.values,
                params.k,
                params.seed.wrapping_add(i),
                params.max_iter,
                params.tol,
            )
            .expect("k already checked")
        })
        .collect();
    Ok(ClusterModel::from_fit(r, params.k, params.seed, best_of(fits)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElbowPoint {
    pub k: usize,
    pub wcss: f64,
}

/// Best WCSS for each `k` in `1..=k_max`.
///
/// Each `k` takes the minimum over `restarts` seeded runs plus one run
/// warm-started from the previous `k`'s best centroids and the point
/// farthest from them, so the curve never increases.
pub fn elbow_curve(
    points: &[Vec<f64>],
    k_max: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    tol: f64,
) -> Result<Vec<ElbowPoint>, ClusterError> {
    check_k(points.len(), k_max)?;
    if restarts == 0 {
        return Err(ClusterError::NoRestarts);
    }
    let mut curve = Vec::with_capacity(k_max);
    let mut previous: Option<LloydFit> = None;
    for k in 1..=k_max {
        let mut fits: Vec<LloydFit> = (0..restarts as u64)
            .into_par_iter()
            .map(|i| {
                kmeans_points(points, k, seed.wrapping_add(i), max_iter, tol)
                    .expect("k already checked")
            })
            .collect();
        if let Some(prev) = &previous {
            let far = farthest_point(points, &prev.centroids);
            let mut init = prev.centroids.clone();
            init.push(points[far].clone());
            fits.push(lloyd(points, init, max_iter, tol));
        }
        let best = best_of(fits);
        curve.push(ElbowPoint { k, wcss: best.wcss });
        previous = Some(best);
    }
    Ok(curve)
}

fn farthest_point(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = nearest(p, centroids).1;
        if d > best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Tickers sharing the anchor's cluster, anchor included, sorted.
pub fn cluster_members(m: &ClusterModel, anchor: &str) -> Result<Vec<String>, ClusterError> {
    let id = m
        .cluster_of(anchor)
        .ok_or_else(|| ClusterError::UnknownTicker(anchor.to_string()))?;
    let mut members: Vec<String> = m
        .tickers
        .iter()
        .zip(&m.assignments)
        .filter(|(_, &c)| c == id)
        .map(|(t, _)| t.clone())
        .collect();
    members.sort();
    Ok(members)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterFeature {
    pub values: Vec<f64>,
    pub warning: Option<String>,
}

/// Equal-weighted weekly mean return of the anchor's peers.
pub fn cluster_feature(
    r: &ReturnMatrix,
    members: &[String],
    anchor: &str,
) -> Result<ClusterFeature, ClusterError> {
    let peers: Vec<&[f64]> = members
        .iter()
        .filter(|t| t.as_str() != anchor)
        .map(|t| {
            r.ticker_index(t)
                .map(|i| r.values[i].as_slice())
                .ok_or_else(|| ClusterError::UnknownTicker(t.clone()))
        })
        .collect::<Result<_, _>>()?;
    let weeks = r.dates.len();
    if peers.is_empty() {
        return Ok(ClusterFeature {
            values: vec![0.0; weeks],
            warning: Some(format!(
                "{anchor} is alone in its cluster; cluster feature set to zero"
            )),
        });
    }
    let values = (0..weeks)
        .map(|j| peers.iter().map(|row| row[j]).sum::<f64>() / peers.len() as f64)
        .collect();
    Ok(ClusterFeature {
        values,
        warning: None,
    })
}

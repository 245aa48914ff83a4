//! Train/test splitting, scoring, and the three-model comparison.
//!
//! "Accuracy" is defined as `100 * R^2` on the test split. The reference
//! accuracies printed next to the obtained ones are published values whose
//! split, target and hyperparameters are unknown; they are not targets.

use std::fmt::{self, Write as _};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::clustering::{self, ClusterError, ClusterModel, ElbowPoint, KMeansParams};
use crate::features::{self, DesignMatrix, ExternalFactors, FactorSeries, FeatureError, ReturnMatrix};
use crate::ingest::Dataset;
use crate::models::{
    self, fit_fama_french, fit_gradient_boost, fit_ols, fit_random_forest, BoostParams, FactorFit,
    FittedModel, ForestParams, ModelError,
};
use crate::report::num;

/// Statement of the accuracy metric printed at the top of every report.
pub const ACCURACY_DEFINITION: &str =
    "accuracy = 100 * R^2 on the test split, R^2 = 1 - SSE/SST with SST about the test-target mean";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("holdout fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),
    #[error("target has zero variance")]
    ZeroVariance,
    #[error("need at least two paired values, got {0}")]
    TooFewValues(usize),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSpec {
    /// Train on quarter 1, test on quarter 2.
    Temporal,
    /// Random `fraction` of rows held out for testing.
    Holdout { fraction: f64, seed: u64 },
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSpec::Temporal => write!(f, "temporal"),
            SplitSpec::Holdout { fraction, .. } => write!(f, "holdout:{fraction}"),
        }
    }
}

impl SplitSpec {
    /// Parses `temporal` or `holdout:<fraction>`; the seed comes from the run.
    pub fn parse(text: &str, seed: u64) -> Option<SplitSpec> {
        match text.trim() {
            "temporal" => Some(SplitSpec::Temporal),
            other => {
                let fraction: f64 = other.strip_prefix("holdout:")?.parse().ok()?;
                (0.0..=1.0)
                    .contains(&fraction)
                    .then_some(SplitSpec::Holdout { fraction, seed })
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SplitSpec::Temporal => "temporal (train quarter 1, test quarter 2)".into(),
            SplitSpec::Holdout { fraction, seed } => {
                format!("holdout (test fraction {fraction}, seed {seed})")
            }
        }
    }
}

/// Time stamp of one usable row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowTime {
    pub date: NaiveDate,
    pub quarter: u8,
}

/// Disjoint, covering `(train, test)` row indices, each sorted ascending.
pub fn split(rows: &[RowTime], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if rows.is_empty() {
        return Err(EvalError::DegenerateSplit("no rows".into()));
    }
    let (train, test): (Vec<usize>, Vec<usize>) = match *spec {
        SplitSpec::Temporal => (0..rows.len()).partition(|&i| rows[i].quarter == 1),
        SplitSpec::Holdout { fraction, seed } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(EvalError::InvalidFraction(fraction));
            }
            let n_test = (fraction * rows.len() as f64).round() as usize;
            let mut order: Vec<usize> = (0..rows.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut test = order[..n_test].to_vec();
            let mut train = order[n_test..].to_vec();
            test.sort_unstable();
            train.sort_unstable();
            (train, test)
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(EvalError::DegenerateSplit(format!(
            "{} training rows, {} test rows",
            train.len(),
            test.len()
        )));
    }
    if *spec == SplitSpec::Temporal {
        let last_train = train.iter().map(|&i| rows[i].date).max();
        let first_test = test.iter().map(|&i| rows[i].date).min();
        if last_train >= first_test {
            return Err(EvalError::DegenerateSplit(
                "quarter 1 rows do not all precede quarter 2 rows".into(),
            ));
        }
    }
    Ok((train, test))
}

/// Coefficient of determination `1 - SSE/SST`.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    if y.len() != yhat.len() || y.len() < 2 {
        return Err(EvalError::TooFewValues(y.len().min(yhat.len())));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sst == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok(1.0 - models::sse(y, yhat) / sst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub targets: Vec<String>,
    pub seed: u64,
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub elbow_k_max: usize,
    pub forest: ForestParams,
    pub boost: BoostParams,
    pub split: SplitSpec,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            targets: vec!["DIS".into()],
            seed: 42,
            k: clustering::DEFAULT_K,
            restarts: clustering::DEFAULT_RESTARTS,
            max_iter: clustering::DEFAULT_MAX_ITER,
            tol: clustering::DEFAULT_TOL,
            elbow_k_max: 10,
            forest: ForestParams::default(),
            boost: BoostParams::default(),
            split: SplitSpec::Temporal,
        }
    }
}

/// The three compared regressors, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Forest,
    Boost,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Linear, ModelKind::Forest, ModelKind::Boost];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear regression",
            ModelKind::Forest => "random forest",
            ModelKind::Boost => "gradient boosting",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Forest => "forest",
            ModelKind::Boost => "boost",
        }
    }

    /// Published accuracy, in percent.
    pub fn reference_accuracy(self) -> f64 {
        match self {
            ModelKind::Linear => 95.23,
            ModelKind::Forest => 71.27,
            ModelKind::Boost => 92.97,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl ResidualSummary {
    pub fn of(residuals: &[f64]) -> Self {
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let var = if residuals.len() > 1 {
            residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        ResidualSummary {
            mean,
            sd: var.sqrt(),
            min: residuals.iter().copied().fold(f64::INFINITY, f64::min),
            max: residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelScore {
    pub kind: ModelKind,
    pub hyperparameters: String,
    pub seed: u64,
    pub train_r2: f64,
    pub test_r2: f64,
    /// `100 * test_r2`.
    pub accuracy: f64,
    pub train_accuracy: f64,
    /// Test-split residuals `y - yhat`.
    pub residuals: ResidualSummary,
    pub test_predictions: Vec<f64>,
}

/// Everything fitted for one target ticker.
#[derive(Debug, Clone)]
pub struct TargetFit {
    pub design: DesignMatrix,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub models: Vec<(ModelKind, FittedModel)>,
}

#[derive(Debug, Clone)]
pub struct TargetReport {
    pub target: String,
    pub cluster_members: Vec<String>,
    pub cluster_warning: Option<String>,
    pub factor_fit: FactorFit,
    pub fit: TargetFit,
    pub scores: Vec<ModelScore>,
    /// Indices into `scores`, best test accuracy first.
    pub ranking: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub split: SplitSpec,
    pub seed: u64,
    pub targets: Vec<TargetReport>,
}

/// Inputs shared by every target: panels, factors and the clustering.
#[derive(Debug, Clone)]
pub struct Panel {
    pub returns: ReturnMatrix,
    pub next_week: ReturnMatrix,
    pub factors: FactorSeries,
    pub clusters: ClusterModel,
}

pub fn build_panel(
    d: &Dataset,
    config: &EvalConfig,
    external: &ExternalFactors,
) -> Result<Panel, EvalError> {
    let returns = features::pivot_returns(d)?;
    let next_week = features::pivot_next_week_returns(d)?;
    let mv = features::market_values(d)?;
    let factors = FactorSeries::build(d, &returns, &mv, external)?;
    let params = KMeansParams {
        k: config.k,
        seed: config.seed,
        max_iter: config.max_iter,
        tol: config.tol,
    };
    let clusters = clustering::kmeans_restarts(&returns, &params, config.restarts)?;
    Ok(Panel {
        returns,
        next_week,
        factors,
        clusters,
    })
}

pub fn elbow(panel: &Panel, config: &EvalConfig) -> Result<Vec<ElbowPoint>, EvalError> {
    let k_max = config.elbow_k_max.min(panel.returns.tickers.len());
    Ok(clustering::elbow_curve(
        &panel.returns.values,
        k_max,
        config.seed,
        config.restarts,
        config.max_iter,
        config.tol,
    )?)
}

fn forest_params(config: &EvalConfig) -> ForestParams {
    ForestParams {
        seed: config.seed,
        ..config.forest
    }
}

fn boost_params(config: &EvalConfig) -> BoostParams {
    BoostParams {
        seed: config.seed,
        ..config.boost
    }
}

fn describe_params(kind: ModelKind, config: &EvalConfig, model: &FittedModel) -> String {
    match (kind, model) {
        (ModelKind::Linear, _) => "ordinary least squares with intercept".into(),
        (ModelKind::Forest, FittedModel::Forest(m)) => format!(
            "trees={} max_depth={} min_leaf={} mtry={} bootstrap={}",
            m.trees.len(),
            m.max_depth,
            m.min_leaf,
            m.mtry,
            m.bootstrap
        ),
        (ModelKind::Boost, _) => {
            let p = boost_params(config);
            format!(
                "stages={} learning_rate={} max_depth={} min_leaf={}",
                p.stages, p.learning_rate, p.max_depth, p.min_leaf
            )
        }
        _ => String::new(),
    }
}

/// Builds the design matrix for one target, splits it, and trains the three
/// regressors on the training rows.
pub fn fit_target(
    panel: &Panel,
    target: &str,
    config: &EvalConfig,
) -> Result<(TargetFit, Vec<String>, Option<String>), EvalError> {
    let members = clustering::cluster_members(&panel.clusters, target)?;
    let feature = clustering::cluster_feature(&panel.returns, &members, target)?;
    let mut design =
        features::build_design_matrix(&panel.next_week, &panel.factors, &feature.values, target)?;
    let times: Vec<RowTime> = design
        .dates
        .iter()
        .zip(&design.quarters)
        .map(|(&date, &quarter)| RowTime { date, quarter })
        .collect();
    let (train, test) = split(&times, &config.split)?;
    design.standardize_volume(&train);

    let x_train = design.x.select_rows(&train);
    let y_train: Vec<f64> = train.iter().map(|&i| design.y[i]).collect();
    let linear = fit_ols(&x_train, &y_train, &design.columns)?;
    let forest = fit_random_forest(&x_train, &y_train, &forest_params(config))?;
    let boost = fit_gradient_boost(&x_train, &y_train, &boost_params(config))?;
    let models = vec![
        (ModelKind::Linear, FittedModel::Linear(linear)),
        (ModelKind::Forest, FittedModel::Forest(forest)),
        (ModelKind::Boost, FittedModel::Boost(boost)),
    ];
    Ok((
        TargetFit {
            design,
            train,
            test,
            models,
        },
        members,
        feature.warning,
    ))
}

fn score(
    fit: &TargetFit,
    kind: ModelKind,
    model: &FittedModel,
    config: &EvalConfig,
) -> Result<ModelScore, EvalError> {
    let rows = |idx: &[usize]| -> (crate::linalg::Matrix, Vec<f64>) {
        (
            fit.design.x.select_rows(idx),
            idx.iter().map(|&i| fit.design.y[i]).collect(),
        )
    };
    let (x_train, y_train) = rows(&fit.train);
    let (x_test, y_test) = rows(&fit.test);
    let train_r2 = r_squared(&y_train, &model.predict(&x_train)?)?;
    let test_predictions = model.predict(&x_test)?;
    let test_r2 = r_squared(&y_test, &test_predictions)?;
    let residuals: Vec<f64> = y_test
        .iter()
        .zip(&test_predictions)
        .map(|(a, b)| a - b)
        .collect();
    Ok(ModelScore {
        kind,
        hyperparameters: describe_params(kind, config, model),
        seed: config.seed,
        train_r2,
        test_r2,
        accuracy: 100.0 * test_r2,
        train_accuracy: 100.0 * train_r2,
        residuals: ResidualSummary::of(&residuals),
        test_predictions,
    })
}

/// Ranks by accuracy, best first; equal accuracies keep report order.
pub fn rank(scores: &[ModelScore]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].accuracy.total_cmp(&scores[a].accuracy));
    order
}

/// Full pipeline: panel, clustering, per-target fits and scoring.
pub fn evaluate_all(
    d: &Dataset,
    config: &EvalConfig,
    external: &ExternalFactors,
) -> Result<(Panel, EvaluationReport), EvalError> {
    let panel = build_panel(d, config, external)?;
    let report = evaluate_panel(&panel, config)?;
    Ok((panel, report))
}

pub fn evaluate_panel(panel: &Panel, config: &EvalConfig) -> Result<EvaluationReport, EvalError> {
    let mut targets = Vec::with_capacity(config.targets.len());
    for target in &config.targets {
        let (fit, cluster_members, cluster_warning) = fit_target(panel, target, config)?;
        let factor_fit = fit_fama_french(&panel.returns, &panel.factors, target)?;
        let scores = fit
            .models
            .iter()
            .map(|(kind, model)| score(&fit, *kind, model, config))
            .collect::<Result<Vec<_>, _>>()?;
        let ranking = rank(&scores);
        targets.push(TargetReport {
            target: target.clone(),
            cluster_members,
            cluster_warning,
            factor_fit,
            fit,
            scores,
            ranking,
        });
    }
    Ok(EvaluationReport {
        split: config.split,
        seed: config.seed,
        targets,
    })
}

fn beta(b: Option<f64>) -> String {
    b.map_or_else(|| "n/a (factor identically zero)".to_string(), num)
}

impl EvaluationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Model comparison report");
        let _ = writeln!(out, "{ACCURACY_DEFINITION}");
        let _ = writeln!(
            out,
            "reference accuracies are published values obtained under an unknown split, target and hyperparameters; they are shown for comparison only"
        );
        let _ = writeln!(out, "split: {}", self.split.describe());
        let _ = writeln!(out, "seed: {}", self.seed);
        for t in &self.targets {
            let _ = writeln!(out);
            let _ = writeln!(out, "target {}", t.target);
            let _ = writeln!(
                out,
                "  rows: {} train, {} test",
                t.fit.train.len(),
                t.fit.test.len()
            );
            let _ = writeln!(out, "  features: {}", t.fit.design.columns.join(", "));
            for (col, dup) in &t.fit.design.dropped {
                let _ = writeln!(out, "  omitted feature: {col} (identical to {dup})");
            }
            let _ = writeln!(out, "  cluster peers: {}", t.cluster_members.join(" "));
            if let Some(w) = &t.cluster_warning {
                let _ = writeln!(out, "  warning: {w}");
            }
            let ff = &t.factor_fit;
            let _ = writeln!(
                out,
                "  three-factor fit: alpha {}, beta_mkt {}, beta_smb {}, beta_hml {}, residual variance {}",
                num(ff.alpha),
                beta(ff.beta_mkt),
                beta(ff.beta_smb),
                beta(ff.beta_hml),
                num(ff.model.residual_variance)
            );
            let _ = writeln!(
                out,
                "  {:<18} {:>12} {:>12} {:>10} {:>12} {:>12} {:>12} {:>12}",
                "model", "train acc", "test acc", "reference", "resid mean", "resid sd", "resid min", "resid max"
            );
            for s in &t.scores {
                let _ = writeln!(
                    out,
                    "  {:<18} {:>12} {:>12} {:>10} {:>12} {:>12} {:>12} {:>12}",
                    s.kind.name(),
                    num(s.train_accuracy),
                    num(s.accuracy),
                    num(s.kind.reference_accuracy()),
                    num(s.residuals.mean),
                    num(s.residuals.sd),
                    num(s.residuals.min),
                    num(s.residuals.max)
                );
            }
            for s in &t.scores {
                let _ = writeln!(out, "  {}: {}", s.kind.name(), s.hyperparameters);
            }
            let ranked: Vec<String> = t
                .ranking
                .iter()
                .enumerate()
                .map(|(place, &i)| format!("{}. {}", place + 1, t.scores[i].kind.name()))
                .collect();
            let _ = writeln!(out, "  ranking: {}", ranked.join(", "));
        }
        out
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "accuracy_definition={ACCURACY_DEFINITION}");
        let _ = writeln!(out, "split={}", self.split);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "targets={}", self.targets.len());
        for t in &self.targets {
            let p = format!("target.{}", t.target);
            let _ = writeln!(out, "{p}.train_rows={}", t.fit.train.len());
            let _ = writeln!(out, "{p}.test_rows={}", t.fit.test.len());
            let _ = writeln!(out, "{p}.features={}", t.fit.design.columns.join(","));
            let omitted: Vec<&str> = t.fit.design.dropped.iter().map(|(c, _)| c.as_str()).collect();
            let _ = writeln!(out, "{p}.omitted_features={}", omitted.join(","));
            let _ = writeln!(out, "{p}.cluster_members={}", t.cluster_members.join(","));
            let ff = &t.factor_fit;
            let _ = writeln!(out, "{p}.ff.alpha={}", num(ff.alpha));
            for (name, b) in [("mkt", ff.beta_mkt), ("smb", ff.beta_smb), ("hml", ff.beta_hml)] {
                let _ = writeln!(out, "{p}.ff.beta_{name}={}", b.map_or("na".into(), num));
            }
            let _ = writeln!(out, "{p}.ff.residual_variance={}", num(ff.model.residual_variance));
            for s in &t.scores {
                let m = format!("{p}.model.{}", s.kind.slug());
                let _ = writeln!(out, "{m}.name={}", s.kind.name());
                let _ = writeln!(out, "{m}.hyperparameters={}", s.hyperparameters);
                let _ = writeln!(out, "{m}.seed={}", s.seed);
                let _ = writeln!(out, "{m}.train_r2={}", num(s.train_r2));
                let _ = writeln!(out, "{m}.test_r2={}", num(s.test_r2));
                let _ = writeln!(out, "{m}.accuracy={}", num(s.accuracy));
                let _ = writeln!(out, "{m}.reference_accuracy={}", num(s.kind.reference_accuracy()));
                let _ = writeln!(out, "{m}.residual_mean={}", num(s.residuals.mean));
                let _ = writeln!(out, "{m}.residual_sd={}", num(s.residuals.sd));
                let _ = writeln!(out, "{m}.residual_min={}", num(s.residuals.min));
                let _ = writeln!(out, "{m}.residual_max={}", num(s.residuals.max));
            }
            let ranked: Vec<&str> = t.ranking.iter().map(|&i| t.scores[i].kind.slug()).collect();
            let _ = writeln!(out, "{p}.ranking={}", ranked.join(","));
        }
        out
    }
}

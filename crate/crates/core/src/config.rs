//! Run configuration: defaults, a flat `key=value` file, and flag overrides.

use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::clustering;
use crate::evaluation::{EvalConfig, SplitSpec};
use crate::features::DESIGN_COLUMNS;
use crate::models::{BoostParams, ForestParams};
use crate::report::figures::DEFAULT_BINS;

/// Every recognised key. Command-line flags use the same names.
pub const KEYS: [&str; 22] = [
    "data",
    "out",
    "seed",
    "k",
    "target",
    "trees",
    "stages",
    "learning-rate",
    "depth",
    "boost-depth",
    "min-leaf",
    "mtry",
    "bootstrap",
    "restarts",
    "k-max",
    "max-iter",
    "tol",
    "split",
    "bins",
    "hml",
    "risk-free",
    "index",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("config line {line}: expected `key=value`")]
    Syntax { line: usize },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub k: usize,
    pub targets: Vec<String>,
    /// Forest size.
    pub trees: usize,
    /// Boosting stages.
    pub stages: usize,
    pub learning_rate: f64,
    /// Forest tree depth.
    pub depth: usize,
    pub boost_depth: usize,
    pub min_leaf: usize,
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub restarts: usize,
    pub k_max: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub split: String,
    pub bins: usize,
    pub hml: Option<PathBuf>,
    pub risk_free: Option<PathBuf>,
    pub index: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let forest = ForestParams::default();
        let boost = BoostParams::default();
        Config {
            data: None,
            out: PathBuf::from("out"),
            seed: 42,
            k: clustering::DEFAULT_K,
            targets: vec!["DIS".into()],
            trees: forest.trees,
            stages: boost.stages,
            learning_rate: boost.learning_rate,
            depth: forest.max_depth,
            boost_depth: boost.max_depth,
            min_leaf: forest.min_leaf,
            mtry: forest.mtry,
            bootstrap: forest.bootstrap,
            restarts: clustering::DEFAULT_RESTARTS,
            k_max: 10,
            max_iter: clustering::DEFAULT_MAX_ITER,
            tol: clustering::DEFAULT_TOL,
            split: "temporal".into(),
            bins: DEFAULT_BINS,
            hml: None,
            risk_free: None,
            index: None,
        }
    }
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| invalid(key, value, "not a number"))
}

fn at_least_one(key: &str, value: &str) -> Result<usize, ConfigError> {
    let n: usize = parse_num(key, value)?;
    if n == 0 {
        return Err(invalid(key, value, "must be at least 1"));
    }
    Ok(n)
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

/// Splits a config file into `(key, value)` pairs. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        pairs.push((key.trim().replace('_', "-"), value.trim().to_string()));
    }
    Ok(pairs)
}

impl Config {
    /// Sets one key, checking the value's range.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "data" => self.data = optional_path(value),
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = parse_num(key, value)?,
            "k" => self.k = at_least_one(key, value)?,
            "target" => {
                let targets: Vec<String> = value
                    .split(',')
                    .map(|t| t.trim().to_ascii_uppercase())
                    .filter(|t| !t.is_empty())
                    .collect();
                if targets.is_empty() {
                    return Err(invalid(key, value, "no ticker given"));
                }
                self.targets = targets;
            }
            "trees" => self.trees = at_least_one(key, value)?,
            "stages" => self.stages = parse_num(key, value)?,
            "learning-rate" => {
                let lr: f64 = parse_num(key, value)?;
                if !(lr > 0.0 && lr <= 1.0) {
                    return Err(invalid(key, value, "must lie in (0, 1]"));
                }
                self.learning_rate = lr;
            }
            "depth" => self.depth = at_least_one(key, value)?,
            "boost-depth" => self.boost_depth = at_least_one(key, value)?,
            "min-leaf" => self.min_leaf = at_least_one(key, value)?,
            "mtry" => {
                self.mtry = match value {
                    "auto" => None,
                    _ => {
                        let m = at_least_one(key, value)?;
                        if m > DESIGN_COLUMNS.len() {
                            return Err(invalid(key, value, "exceeds the number of features"));
                        }
                        Some(m)
                    }
                }
            }
            "bootstrap" => {
                self.bootstrap = value
                    .parse()
                    .map_err(|_| invalid(key, value, "expected true or false"))?
            }
            "restarts" => self.restarts = at_least_one(key, value)?,
            "k-max" => self.k_max = at_least_one(key, value)?,
            "max-iter" => self.max_iter = at_least_one(key, value)?,
            "tol" => {
                let tol: f64 = parse_num(key, value)?;
                if !(tol.is_finite() && tol >= 0.0) {
                    return Err(invalid(key, value, "must be finite and non-negative"));
                }
                self.tol = tol;
            }
            "split" => {
                SplitSpec::parse(value, 0)
                    .ok_or_else(|| invalid(key, value, "expected temporal or holdout:<fraction>"))?;
                self.split = value.trim().to_string();
            }
            "bins" => self.bins = at_least_one(key, value)?,
            "hml" => self.hml = optional_path(value),
            "risk-free" => self.risk_free = optional_path(value),
            "index" => self.index = optional_path(value),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec::parse(&self.split, self.seed).expect("split checked in set")
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            targets: self.targets.clone(),
            seed: self.seed,
            k: self.k,
            restarts: self.restarts,
            max_iter: self.max_iter,
            tol: self.tol,
            elbow_k_max: self.k_max,
            forest: ForestParams {
                trees: self.trees,
                max_depth: self.depth,
                min_leaf: self.min_leaf,
                mtry: self.mtry,
                bootstrap: self.bootstrap,
                seed: self.seed,
            },
            boost: BoostParams {
                stages: self.stages,
                learning_rate: self.learning_rate,
                max_depth: self.boost_depth,
                min_leaf: self.min_leaf,
                seed: self.seed,
            },
            split: self.split_spec(),
        }
    }

    /// The effective configuration as `key=value` lines. The output
    /// directory is left out so that runs into different directories
    /// produce identical trees.
    pub fn echo(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("data", path(&self.data));
        kv("seed", self.seed.to_string());
        kv("k", self.k.to_string());
        kv("target", self.targets.join(","));
        kv("trees", self.trees.to_string());
        kv("stages", self.stages.to_string());
        kv("learning-rate", self.learning_rate.to_string());
        kv("depth", self.depth.to_string());
        kv("boost-depth", self.boost_depth.to_string());
        kv("min-leaf", self.min_leaf.to_string());
        kv("mtry", self.mtry.map_or("auto".into(), |m| m.to_string()));
        kv("bootstrap", self.bootstrap.to_string());
        kv("restarts", self.restarts.to_string());
        kv("k-max", self.k_max.to_string());
        kv("max-iter", self.max_iter.to_string());
        kv("tol", self.tol.to_string());
        kv("split", self.split.clone());
        kv("bins", self.bins.to_string());
        kv("hml", path(&self.hml));
        kv("risk-free", path(&self.risk_free));
        kv("index", path(&self.index));
        out
    }
}

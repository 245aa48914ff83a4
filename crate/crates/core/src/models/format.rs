//! Line-oriented text format for fitted models.
//!
//! ```text
//! djia-model 1
//! kind forest
//! n_features 5
//! ...
//! tree 0 3
//! split 1 0.25 1 2
//! leaf -0.5 12
//! leaf 0.75 13
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so reading a
//! model back yields a bit-identical value.

use std::fmt::Write as _;
use std::str::{FromStr, SplitWhitespace};

use thiserror::Error;

use super::{BoostModel, FittedModel, ForestModel, LinearModel, Node, RegressionTree};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "djia-model";

#[derive(Debug, Error, PartialEq)]
#[error("model file line {line}: {reason}")]
pub struct FormatError {
    pub line: usize,
    pub reason: String,
}

pub(super) fn write_model(model: &FittedModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(out, "kind {}", model.kind());
    match model {
        FittedModel::Linear(m) => {
            let _ = writeln!(out, "intercept {:?}", m.intercept);
            let _ = writeln!(out, "residual_variance {:?}", m.residual_variance);
            let _ = writeln!(out, "coefficients {}", m.coefficients.len());
            for (name, c) in &m.coefficients {
                let _ = writeln!(out, "coef {name} {c:?}");
            }
        }
        FittedModel::Forest(m) => {
            let _ = writeln!(out, "n_features {}", m.n_features);
            let _ = writeln!(out, "seed {}", m.seed);
            let _ = writeln!(out, "mtry {}", m.mtry);
            let _ = writeln!(out, "bootstrap {}", m.bootstrap);
            let _ = writeln!(out, "max_depth {}", m.max_depth);
            let _ = writeln!(out, "min_leaf {}", m.min_leaf);
            write_trees(&mut out, &m.trees);
        }
        FittedModel::Boost(m) => {
            let _ = writeln!(out, "n_features {}", m.n_features);
            let _ = writeln!(out, "seed {}", m.seed);
            let _ = writeln!(out, "learning_rate {:?}", m.learning_rate);
            let _ = writeln!(out, "max_depth {}", m.max_depth);
            let _ = writeln!(out, "min_leaf {}", m.min_leaf);
            let _ = writeln!(out, "initial {:?}", m.initial);
            let trace: Vec<String> = m.sse_trace.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "sse_trace {} {}", trace.len(), trace.join(" "));
            write_trees(&mut out, &m.trees);
        }
    }
    out
}

fn write_trees(out: &mut String, trees: &[RegressionTree]) {
    let _ = writeln!(out, "trees {}", trees.len());
    for (i, tree) in trees.iter().enumerate() {
        let _ = writeln!(out, "tree {i} {}", tree.nodes.len());
        for node in &tree.nodes {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(out, "split {feature} {threshold:?} {left} {right}");
                }
                Node::Leaf { value, samples } => {
                    let _ = writeln!(out, "leaf {value:?} {samples}");
                }
            }
        }
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: impl Into<String>) -> FormatError {
        FormatError {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn next_line(&mut self) -> Result<SplitWhitespace<'a>, FormatError> {
        loop {
            let (i, text) = self
                .lines
                .next()
                .ok_or_else(|| self.err("unexpected end of file"))?;
            self.line = i + 1;
            if !text.trim().is_empty() {
                return Ok(text.split_whitespace());
            }
        }
    }

    fn parse<T: FromStr>(&self, token: Option<&str>, what: &str) -> Result<T, FormatError> {
        token
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err(format!("bad or missing {what}")))
    }

    /// Reads `key value` and returns the parsed value.
    fn field<T: FromStr>(&mut self, key: &str) -> Result<T, FormatError> {
        let mut tokens = self.next_line()?;
        if tokens.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        let value = self.parse(tokens.next(), key)?;
        if tokens.next().is_some() {
            return Err(self.err(format!("trailing data after `{key}`")));
        }
        Ok(value)
    }

    fn trees(&mut self, n_features: usize, max_depth: usize, min_leaf: usize) -> Result<Vec<RegressionTree>, FormatError> {
        let count: usize = self.field("trees")?;
        let mut trees = Vec::with_capacity(count);
        for expected in 0..count {
            let mut head = self.next_line()?;
            if head.next() != Some("tree") {
                return Err(self.err("expected `tree`"));
            }
            let index: usize = self.parse(head.next(), "tree index")?;
            if index != expected {
                return Err(self.err(format!("tree index {index}, expected {expected}")));
            }
            let n_nodes: usize = self.parse(head.next(), "node count")?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let mut t = self.next_line()?;
                let node = match t.next() {
                    Some("split") => {
                        let feature: usize = self.parse(t.next(), "feature")?;
                        let threshold = self.parse(t.next(), "threshold")?;
                        let left: usize = self.parse(t.next(), "left child")?;
                        let right: usize = self.parse(t.next(), "right child")?;
                        if feature >= n_features || left >= n_nodes || right >= n_nodes {
                            return Err(self.err("split refers outside the tree"));
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        }
                    }
                    Some("leaf") => Node::Leaf {
                        value: self.parse(t.next(), "leaf value")?,
                        samples: self.parse(t.next(), "leaf samples")?,
                    },
                    _ => return Err(self.err("expected `split` or `leaf`")),
                };
                nodes.push(node);
            }
            if nodes.is_empty() {
                return Err(self.err("tree without nodes"));
            }
            trees.push(RegressionTree {
                nodes,
                max_depth,
                min_leaf,
                n_features,
            });
        }
        Ok(trees)
    }
}

pub(super) fn read_model(text: &str) -> Result<FittedModel, FormatError> {
    let mut r = Reader {
        lines: text.lines().enumerate(),
        line: 0,
    };
    let version: u32 = r.field(MAGIC)?;
    if version != FORMAT_VERSION {
        return Err(r.err(format!("unsupported format version {version}")));
    }
    let kind: String = r.field("kind")?;
    let model = match kind.as_str() {
        "linear" => {
            let intercept = r.field("intercept")?;
            let residual_variance = r.field("residual_variance")?;
            let count: usize = r.field("coefficients")?;
            let mut coefficients = Vec::with_capacity(count);
            for _ in 0..count {
                let mut t = r.next_line()?;
                if t.next() != Some("coef") {
                    return Err(r.err("expected `coef`"));
                }
                let name: String = r.parse(t.next(), "coefficient name")?;
                let value = r.parse(t.next(), "coefficient value")?;
                coefficients.push((name, value));
            }
            FittedModel::Linear(LinearModel {
                intercept,
                coefficients,
                residual_variance,
            })
        }
        "forest" => {
            let n_features = r.field("n_features")?;
            let seed = r.field("seed")?;
            let mtry = r.field("mtry")?;
            let bootstrap = r.field("bootstrap")?;
            let max_depth = r.field("max_depth")?;
            let min_leaf = r.field("min_leaf")?;
            let trees = r.trees(n_features, max_depth, min_leaf)?;
            FittedModel::Forest(ForestModel {
                trees,
                mtry,
                bootstrap,
                seed,
                max_depth,
                min_leaf,
                n_features,
            })
        }
        "boost" => {
            let n_features = r.field("n_features")?;
            let seed = r.field("seed")?;
            let learning_rate = r.field("learning_rate")?;
            let max_depth = r.field("max_depth")?;
            let min_leaf = r.field("min_leaf")?;
            let initial = r.field("initial")?;
            let mut t = r.next_line()?;
            if t.next() != Some("sse_trace") {
                return Err(r.err("expected `sse_trace`"));
            }
            let len: usize = r.parse(t.next(), "trace length")?;
            let sse_trace = (0..len)
                .map(|_| r.parse(t.next(), "trace value"))
                .collect::<Result<Vec<f64>, _>>()?;
            let trees = r.trees(n_features, max_depth, min_leaf)?;
            FittedModel::Boost(BoostModel {
                initial,
                trees,
                learning_rate,
                max_depth,
                min_leaf,
                seed,
                n_features,
                sse_trace,
            })
        }
        other => return Err(r.err(format!("unknown model kind `{other}`"))),
    };
    Ok(model)
}

//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 on runtime or validation failure, 2 on
//! usage errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use clap::{Arg, ArgMatches, Command};

use crate::config::{self, Config, KEYS};
use crate::evaluation::{self, EvalConfig, EvaluationReport, Panel};
use crate::features::{ExternalFactors, ExternalSeries};
use crate::ingest::{self, Dataset, ValidationReport};
use crate::report::{figures, OutputTree};

const SUBCOMMANDS: [(&str, &str); 6] = [
    ("validate", "Parse and validate the dataset"),
    ("eda", "Price, histogram and log-price figures"),
    ("cluster", "K-means assignments, elbow curve and cluster peers"),
    ("fit", "Train the three regressors and write them to models/"),
    ("evaluate", "Score the regressors on the test split"),
    ("report", "Run every stage"),
];

enum Failure {
    Usage(String),
    Runtime(String),
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn command() -> Command {
    let mut args: Vec<Arg> = KEYS
        .iter()
        .map(|&key| Arg::new(key).long(key).value_name("VALUE").num_args(1))
        .collect();
    args.push(
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .help("flat key=value file; flags take precedence"),
    );
    Command::new("djia")
        .about("Dow Jones weekly factors, clustering and model comparison")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands(
            SUBCOMMANDS
                .iter()
                .map(|&(name, about)| Command::new(name).about(about).args(args.clone())),
        )
}

fn resolve_config(m: &ArgMatches) -> Result<Config, Failure> {
    let mut config = Config::default();
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Runtime(format!("cannot read config file {path}: {e}")))?;
        let pairs = config::parse_file(&text).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
        for (key, value) in pairs {
            config
                .set(&key, &value)
                .map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
        }
    }
    for key in KEYS {
        if let Some(value) = m.get_one::<String>(key) {
            config.set(key, value).map_err(|e| Failure::Usage(e.to_string()))?;
        }
    }
    Ok(config)
}

fn load(config: &Config) -> Result<(Dataset, ValidationReport), Failure> {
    let path = config
        .data
        .as_ref()
        .ok_or_else(|| Failure::Usage("--data is required".into()))?;
    let d = ingest::dedup(ingest::parse_dataset(path).map_err(runtime)?);
    let report = ingest::validate(&d).map_err(|e| Failure::Runtime(format!("validation failed: {e}")))?;
    Ok((d, report))
}

fn check_against_data(config: &Config, d: &Dataset) -> Result<(), Failure> {
    if config.k > d.tickers.len() {
        return Err(Failure::Usage(format!(
            "--k {} exceeds the {} tickers in the dataset",
            config.k,
            d.tickers.len()
        )));
    }
    if let Some(t) = config.targets.iter().find(|t| !d.tickers.contains(t)) {
        return Err(Failure::Usage(format!("--target {t} is not a ticker in the dataset")));
    }
    Ok(())
}

fn external(config: &Config) -> Result<ExternalFactors, Failure> {
    let load = |p: &Option<std::path::PathBuf>| {
        p.as_ref()
            .map(ExternalSeries::load)
            .transpose()
            .map_err(runtime)
    };
    Ok(ExternalFactors {
        risk_free: load(&config.risk_free)?,
        hml: load(&config.hml)?,
        index: load(&config.index)?,
    })
}

fn add_eda(tree: &mut OutputTree, d: &Dataset, config: &Config) -> Result<(), Failure> {
    tree.add_figure(figures::prices_figure(d));
    tree.add_figure(figures::histograms_figure(d, config.bins).map_err(runtime)?);
    tree.add_figure(figures::log_prices_figure(d).map_err(runtime)?);
    Ok(())
}

fn add_cluster(tree: &mut OutputTree, panel: &Panel, eval: &EvalConfig) -> Result<(), Failure> {
    let curve = evaluation::elbow(panel, eval).map_err(runtime)?;
    tree.add_figure(figures::elbow_figure(&curve));
    tree.add("clusters.csv", figures::assignments_csv(&panel.clusters));
    let mut members = String::from("target,cluster,member\n");
    for t in &eval.targets {
        let c = panel
            .clusters
            .cluster_of(t)
            .ok_or_else(|| Failure::Usage(format!("unknown ticker {t}")))?;
        for m in crate::clustering::cluster_members(&panel.clusters, t).map_err(runtime)? {
            let _ = writeln!(members, "{t},{c},{m}");
        }
    }
    tree.add("cluster_members.csv", members);
    Ok(())
}

fn add_models(tree: &mut OutputTree, report: &EvaluationReport) {
    for t in &report.targets {
        for (kind, model) in &t.fit.models {
            tree.add(
                format!("models/{}_{}.model", t.target, kind.slug()),
                model.to_text(),
            );
        }
    }
}

fn add_evaluation(tree: &mut OutputTree, report: &EvaluationReport) {
    tree.add("report.txt", report.to_text());
    tree.add("report.kv", report.to_kv());
    for fig in figures::prediction_figures(report) {
        tree.add_figure(fig);
    }
    tree.add_figure(figures::accuracy_figure(report));
}

fn fit_only(panel: &Panel, eval: &EvalConfig, tree: &mut OutputTree) -> Result<(), Failure> {
    for target in &eval.targets {
        let (fit, _, _) = evaluation::fit_target(panel, target, eval).map_err(runtime)?;
        for (kind, model) in &fit.models {
            tree.add(
                format!("models/{target}_{}.model", kind.slug()),
                model.to_text(),
            );
        }
    }
    Ok(())
}

fn execute(name: &str, config: &Config) -> Result<String, Failure> {
    let (d, validation) = load(config)?;
    check_against_data(config, &d)?;
    let mut tree = OutputTree::default();
    tree.add("config.txt", config.echo());
    let mut summary = String::new();
    let eval = config.eval_config();

    if matches!(name, "validate" | "report") {
        tree.add("validation.txt", validation.to_text());
        tree.add("validation.kv", validation.to_kv());
        summary.push_str(&validation.to_text());
    }
    if matches!(name, "eda" | "report") {
        add_eda(&mut tree, &d, config)?;
    }
    if matches!(name, "cluster" | "fit" | "evaluate" | "report") {
        let panel = evaluation::build_panel(&d, &eval, &external(config)?).map_err(runtime)?;
        if matches!(name, "cluster" | "report") {
            add_cluster(&mut tree, &panel, &eval)?;
        }
        if name == "fit" {
            fit_only(&panel, &eval, &mut tree)?;
        }
        if matches!(name, "evaluate" | "report") {
            let report = evaluation::evaluate_panel(&panel, &eval).map_err(runtime)?;
            add_evaluation(&mut tree, &report);
            if name == "report" {
                add_models(&mut tree, &report);
            }
            summary.push_str(&report.to_text());
        }
    }
    write_tree(&tree, &config.out)?;
    let _ = writeln!(
        summary,
        "wrote {} files and manifest.txt to {}",
        tree.paths().count(),
        config.out.display()
    );
    Ok(summary)
}

fn write_tree(tree: &OutputTree, dir: &Path) -> Result<(), Failure> {
    tree.write(dir)
        .map(|_| ())
        .map_err(|e| Failure::Runtime(format!("cannot write to {}: {e}", dir.display())))
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut cmd = command();
    let matches = match cmd.try_get_matches_from_mut(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let result = resolve_config(sub).and_then(|config| execute(name, &config));
    match result {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(Failure::Usage(msg)) => {
            let usage = cmd
                .find_subcommand_mut(name)
                .map(|s| s.render_usage().to_string())
                .unwrap_or_default();
            eprintln!("error: {msg}\n\n{usage}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

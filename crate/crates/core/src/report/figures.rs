//! Builders for the EDA, clustering and model-comparison figures.

use std::fmt::Write as _;

use crate::clustering::{ClusterModel, ElbowPoint};
use crate::evaluation::{EvaluationReport, ModelKind};
use crate::features::{histogram, log_transform, FeatureError};
use crate::ingest::{Dataset, WeeklyRecord};

use super::svg::{self, BarGroup, HistogramPanel, Series};
use super::{num, Figure};

pub const DEFAULT_BINS: usize = 20;

type Column = (&'static str, fn(&WeeklyRecord) -> Option<f64>);

/// Numeric attributes shown in the histogram grid.
pub const HISTOGRAM_COLUMNS: [Column; 13] = [
    ("open", |r| Some(r.open)),
    ("high", |r| Some(r.high)),
    ("low", |r| Some(r.low)),
    ("close", |r| Some(r.close)),
    ("volume", |r| Some(r.volume as f64)),
    ("percent_change_price", |r| Some(r.percent_change_price)),
    ("percent_change_volume_over_last_wk", |r| r.percent_change_volume_over_last_wk),
    ("previous_weeks_volume", |r| r.previous_weeks_volume.map(|v| v as f64)),
    ("next_weeks_open", |r| Some(r.next_weeks_open)),
    ("next_weeks_close", |r| Some(r.next_weeks_close)),
    ("percent_change_next_weeks_price", |r| Some(r.percent_change_next_weeks_price)),
    ("days_to_next_dividend", |r| Some(r.days_to_next_dividend as f64)),
    ("percent_return_next_dividend", |r| Some(r.percent_return_next_dividend)),
];

fn date_labels(d: &Dataset) -> Vec<String> {
    d.dates.iter().map(|d| d.to_string()).collect()
}

fn per_ticker(d: &Dataset, value: impl Fn(&WeeklyRecord) -> f64) -> Vec<(String, Vec<f64>)> {
    d.tickers
        .iter()
        .map(|t| (t.clone(), d.records_for(t).map(&value).collect()))
        .collect()
}

fn long_table(header: &str, d: &Dataset, series: &[(String, Vec<f64>)]) -> String {
    let mut csv = format!("{header}\n");
    for (ticker, values) in series {
        for (date, v) in d.dates.iter().zip(values) {
            let _ = writeln!(csv, "{ticker},{date},{}", num(*v));
        }
    }
    csv
}

fn series_chart(title: &str, y_label: &str, d: &Dataset, series: &[(String, Vec<f64>)]) -> String {
    let refs: Vec<Series> = series
        .iter()
        .map(|(t, v)| Series {
            label: t,
            values: v,
        })
        .collect();
    svg::line_chart(title, y_label, &date_labels(d), &refs)
}

/// Weekly close price per stock.
pub fn prices_figure(d: &Dataset) -> Figure {
    let series = per_ticker(d, |r| r.close);
    Figure {
        stem: "fig1_prices".into(),
        svg: series_chart("Weekly close price by stock", "close (USD)", d, &series),
        csv: long_table("ticker,date,close", d, &series),
    }
}

pub fn histograms_figure(d: &Dataset, bins: usize) -> Result<Figure, FeatureError> {
    let mut csv = String::from("column,bin_lower,bin_upper,count\n");
    let mut panels = Vec::new();
    for (name, get) in HISTOGRAM_COLUMNS {
        let values: Vec<f64> = d.records.iter().filter_map(get).collect();
        if values.is_empty() {
            continue;
        }
        let h: Vec<(f64, f64, usize)> = histogram(&values, bins)?
            .into_iter()
            .map(|b| (b.lower, b.upper, b.count))
            .collect();
        for (lo, hi, count) in &h {
            let _ = writeln!(csv, "{name},{},{},{count}", num(*lo), num(*hi));
        }
        panels.push((name, h));
    }
    let refs: Vec<HistogramPanel> = panels
        .iter()
        .map(|(label, bins)| HistogramPanel { label, bins })
        .collect();
    Ok(Figure {
        stem: "fig2_histograms".into(),
        svg: svg::histogram_grid("Frequency histograms", &refs),
        csv,
    })
}

/// Natural log of the weekly close price per stock.
pub fn log_prices_figure(d: &Dataset) -> Result<Figure, FeatureError> {
    let series = d
        .tickers
        .iter()
        .map(|t| {
            let closes: Vec<f64> = d.records_for(t).map(|r| r.close).collect();
            log_transform(&closes).map(|logs| (t.clone(), logs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Figure {
        stem: "fig3_log_prices".into(),
        svg: series_chart("Log close price by stock", "ln(close)", d, &series),
        csv: long_table("ticker,date,log_close", d, &series),
    })
}

pub fn elbow_figure(curve: &[ElbowPoint]) -> Figure {
    let mut csv = String::from("k,wcss\n");
    for p in curve {
        let _ = writeln!(csv, "{},{}", p.k, num(p.wcss));
    }
    let points: Vec<(f64, f64)> = curve.iter().map(|p| (p.k as f64, p.wcss)).collect();
    Figure {
        stem: "fig4_elbow".into(),
        svg: svg::xy_chart(
            "Within-cluster sum of squares by cluster count",
            "clusters",
            "WCSS",
            &points,
        ),
        csv,
    }
}

/// `ticker,cluster` for every stock.
pub fn assignments_csv(model: &ClusterModel) -> String {
    let mut csv = String::from("ticker,cluster\n");
    for (t, c) in model.tickers.iter().zip(&model.assignments) {
        let _ = writeln!(csv, "{t},{c}");
    }
    csv
}

fn figure_stem(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Linear => "fig5_linear",
        ModelKind::Forest => "fig6_forest",
        ModelKind::Boost => "fig7_boost",
    }
}

/// Actual versus predicted next-week return on the test rows, one figure
/// per model kind.
pub fn prediction_figures(report: &EvaluationReport) -> Vec<Figure> {
    ModelKind::ALL
        .iter()
        .map(|&kind| {
            let mut csv = String::from("target,date,actual,predicted\n");
            let mut series: Vec<(String, Vec<f64>)> = Vec::new();
            let mut labels: Vec<String> = Vec::new();
            for t in &report.targets {
                let Some(score) = t.scores.iter().find(|s| s.kind == kind) else {
                    continue;
                };
                let actual: Vec<f64> = t.fit.test.iter().map(|&i| t.fit.design.y[i]).collect();
                let dates: Vec<String> = t
                    .fit
                    .test
                    .iter()
                    .map(|&i| t.fit.design.dates[i].to_string())
                    .collect();
                for ((date, a), p) in dates.iter().zip(&actual).zip(&score.test_predictions) {
                    let _ = writeln!(csv, "{},{date},{},{}", t.target, num(*a), num(*p));
                }
                if labels.is_empty() {
                    labels = dates;
                }
                series.push((format!("{} actual", t.target), actual));
                series.push((format!("{} predicted", t.target), score.test_predictions.clone()));
            }
            let refs: Vec<Series> = series
                .iter()
                .map(|(label, values)| Series { label, values })
                .collect();
            Figure {
                stem: figure_stem(kind).into(),
                svg: svg::line_chart(
                    &format!("{}: next-week return on test weeks", kind.name()),
                    "percent",
                    &labels,
                    &refs,
                ),
                csv,
            }
        })
        .collect()
}

/// Obtained versus reference accuracy for each model.
pub fn accuracy_figure(report: &EvaluationReport) -> Figure {
    let mut csv = String::from("target,model,accuracy,reference_accuracy\n");
    let mut groups = Vec::new();
    for t in &report.targets {
        for s in &t.scores {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                t.target,
                s.kind.slug(),
                num(s.accuracy),
                num(s.kind.reference_accuracy())
            );
            groups.push((
                format!("{} {}", t.target, s.kind.slug()),
                vec![s.accuracy, s.kind.reference_accuracy()],
            ));
        }
    }
    let refs: Vec<BarGroup> = groups
        .iter()
        .map(|(label, values)| BarGroup {
            label,
            values: values.clone(),
        })
        .collect();
    Figure {
        stem: "accuracy".into(),
        svg: svg::bar_chart(
            "Test accuracy (100 x R squared) versus reference",
            "accuracy",
            &["obtained", "reference"],
            &refs,
        ),
        csv,
    }
}

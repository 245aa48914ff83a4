//! Shared fixtures for the integration tests.
//!
//! `canonical_path()` returns the weekly Dow Jones file named by the
//! `DJI_DATA_PATH` environment variable. Without it, a stand-in with the
//! same layout is generated: the real 30 tickers and 25 Friday dates, the
//! real first row, and prices driven by a market factor plus three sector
//! factors so clustering has structure to find.

#![allow(dead_code)]

pub mod fixtures;
pub mod oracle;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TICKERS: [&str; 30] = [
    "AA", "AXP", "BA", "BAC", "CAT", "CSCO", "CVX", "DD", "DIS", "GE", "HD", "HPQ", "IBM", "INTC",
    "JNJ", "JPM", "KRFT", "KO", "MCD", "MMM", "MRK", "MSFT", "PFE", "PG", "T", "TRV", "UTX", "VZ",
    "WMT", "XOM",
];

/// `(month, day)` in 2011; the first 12 are quarter 1.
pub const DATES: [(u32, u32); 25] = [
    (1, 7),
    (1, 14),
    (1, 21),
    (1, 28),
    (2, 4),
    (2, 11),
    (2, 18),
    (2, 25),
    (3, 4),
    (3, 11),
    (3, 18),
    (3, 25),
    (4, 1),
    (4, 8),
    (4, 15),
    (4, 21),
    (4, 29),
    (5, 6),
    (5, 13),
    (5, 20),
    (5, 27),
    (6, 3),
    (6, 10),
    (6, 17),
    (6, 24),
];
pub const Q1_WEEKS: usize = 12;

pub const HEADER: &str = "quarter,stock,date,open,high,low,close,volume,percent_change_price,percent_change_volume_over_last_wk,previous_weeks_volume,next_weeks_open,next_weeks_close,percent_change_next_weeks_price,days_to_next_dividend,percent_return_next_dividend";
pub const FIRST_ROW: &str =
    "1,AA,1/7/2011,$15.82,$16.72,$15.78,$16.42,239655616,3.79267,,,$16.71,$15.97,-4.42849,26,0.182704";

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn pct(x: f64) -> String {
    let s = format!("{x:.5}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

struct Week {
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    volume: u64,
}

/// Generates the stand-in file text. One extra week is simulated so the
/// last row has next-week fields.
pub fn standin_text(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weeks = DATES.len() + 1;
    let market: Vec<f64> = (0..weeks).map(|_| 2.0 * normal(&mut rng)).collect();
    let sectors: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..weeks).map(|_| 2.5 * normal(&mut rng)).collect())
        .collect();

    let mut panel: Vec<Vec<Week>> = Vec::new();
    for (i, _) in TICKERS.iter().enumerate() {
        let beta = 0.6 + 0.8 * rng.gen::<f64>();
        let sector = i % 3;
        let base_volume = rng.gen_range(5.0e6..2.0e8);
        let mut price = rng.gen_range(15.0..160.0);
        let mut series = Vec::with_capacity(weeks);
        for t in 0..weeks {
            let ret = beta * market[t] + sectors[sector][t] + 0.8 * normal(&mut rng);
            let open = cents(price * (1.0 + 0.002 * normal(&mut rng)));
            let close = cents(open * (1.0 + ret / 100.0)).max(0.01);
            let high = cents(open.max(close) * (1.0 + 0.01 * normal(&mut rng).abs()));
            let low = cents(open.min(close) * (1.0 - 0.01 * normal(&mut rng).abs()));
            let volume = (base_volume * (0.3 * normal(&mut rng)).exp()).round() as u64;
            series.push(Week {
                open,
                high,
                low,
                close,
                volume,
            });
            price = close;
        }
        panel.push(series);
    }
    // The first two AA weeks carry the published values.
    let aa = &mut panel[0];
    aa[0] = Week {
        open: 15.82,
        high: 16.72,
        low: 15.78,
        close: 16.42,
        volume: 239_655_616,
    };
    aa[1].open = 16.71;
    aa[1].close = 15.97;
    aa[1].high = aa[1].high.max(16.71);
    aa[1].low = aa[1].low.min(15.97);

    let mut rows: Vec<(usize, String)> = Vec::new();
    for (i, ticker) in TICKERS.iter().enumerate() {
        let series = &panel[i];
        let dividend = cents(rng.gen_range(0.02..0.9));
        let mut days: i64 = rng.gen_range(0..90);
        for (t, &(m, d)) in DATES.iter().enumerate() {
            let w = &series[t];
            let next = &series[t + 1];
            let quarter = if t < Q1_WEEKS { 1 } else { 2 };
            let (vol_change, prev_volume) = if t == 0 {
                (String::new(), String::new())
            } else {
                let prev = series[t - 1].volume;
                (
                    pct(100.0 * (w.volume as f64 - prev as f64) / prev as f64),
                    prev.to_string(),
                )
            };
            let row = if i == 0 && t == 0 {
                FIRST_ROW.to_string()
            } else {
                format!(
                    "{quarter},{ticker},{m}/{d}/2011,${:.2},${:.2},${:.2},${:.2},{},{},{vol_change},{prev_volume},${:.2},${:.2},{},{days},{}",
                    w.open,
                    w.high,
                    w.low,
                    w.close,
                    w.volume,
                    pct(100.0 * (w.close - w.open) / w.open),
                    next.open,
                    next.close,
                    pct(100.0 * (next.close - next.open) / next.open),
                    pct(100.0 * dividend / w.close),
                )
            };
            rows.push((quarter, row));
            days = if days >= 7 { days - 7 } else { days + 84 };
        }
    }
    rows.sort_by_key(|(q, _)| *q);
    let mut text = String::from(HEADER);
    text.push('\n');
    for (_, row) in rows {
        let _ = writeln!(text, "{row}");
    }
    text
}

/// Path of the dataset used by the canonical-file checks.
pub fn canonical_path() -> PathBuf {
    static PATH: OnceLock<PathBuf> = OnceLock::new();
    PATH.get_or_init(|| {
        if let Some(p) = std::env::var_os("DJI_DATA_PATH") {
            return PathBuf::from(p);
        }
        let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
            .join(format!("dow_jones_index_standin_{}.data", std::process::id()));
        std::fs::write(&path, standin_text(2011)).expect("write stand-in dataset");
        path
    })
    .clone()
}

/// Whether the canonical checks run against the real file.
pub fn using_real_file() -> bool {
    std::env::var_os("DJI_DATA_PATH").is_some()
}

pub fn run_cli(args: &[&str]) -> i32 {
    let mut argv = vec!["djia"];
    argv.extend_from_slice(args);
    djia_factors::cli::run(argv)
}

/// Text content of every `<text>` element that parses as a number.
pub fn svg_numbers(svg: &str) -> Vec<String> {
    let doc = roxmltree::Document::parse(svg).expect("well-formed SVG");
    doc.descendants()
        .filter(|n| n.has_tag_name("text"))
        .filter_map(|n| n.text())
        .filter(|t| t.trim().parse::<f64>().is_ok())
        .map(|t| t.trim().to_string())
        .collect()
}

/// Every comma-separated field of a data file.
pub fn csv_fields(csv: &str) -> HashSet<String> {
    csv.lines()
        .flat_map(|l| l.split(','))
        .map(|f| f.trim().to_string())
        .collect()
}

/// Relative path to bytes for every file below `dir`.
pub fn read_tree(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &std::path::Path, dir: &std::path::Path, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out
}

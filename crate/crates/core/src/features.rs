//! Panel construction, common factors and EDA transforms.
//!
//! "Market value" is proxied by dollar trading value (`close * volume`)
//! because the dataset carries no shares-outstanding figure. MKT is the
//! value-weighted cross-sectional mean return; SMB splits each week's
//! tickers at the median market value and differences the equal-weighted
//! group means.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

use crate::ingest::{parse_date, Dataset, WeeklyRecord};
use crate::linalg::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("no record for {stock} on {date}")]
    MissingCell { stock: String, date: NaiveDate },
    #[error("week {date}: {reason}")]
    DegenerateWeek { date: NaiveDate, reason: String },
    #[error("axes of the inputs do not line up")]
    MisalignedAxes,
    #[error("input {index} is not positive ({value})")]
    NonPositiveInput { index: usize, value: f64 },
    #[error("series is empty")]
    EmptySeries,
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("unknown ticker `{0}`")]
    UnknownTicker(String),
    #[error("factor file {path}: {reason}")]
    FactorFile { path: String, reason: String },
}

/// Stocks x weeks table of a per-record quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Quarter label of each date column.
    pub quarters: Vec<u8>,
    /// `values[i][j]` belongs to ticker `i`, week `j`.
    pub values: Vec<Vec<f64>>,
}

impl ReturnMatrix {
    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn row(&self, ticker: &str) -> Result<&[f64], FeatureError> {
        self.ticker_index(ticker)
            .map(|i| self.values[i].as_slice())
            .ok_or_else(|| FeatureError::UnknownTicker(ticker.to_string()))
    }

    fn same_axes<T>(&self, other: &PanelTable<T>) -> bool {
        self.tickers == other.tickers && self.dates == other.dates
    }
}

/// Dollar trading value per (ticker, week).
pub type MarketValueTable = PanelTable<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PanelTable<T> {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<Vec<T>>,
}

/// Pivots any per-record field into a complete ticker x date table.
pub fn pivot_field(
    d: &Dataset,
    field: impl Fn(&WeeklyRecord) -> f64,
) -> Result<ReturnMatrix, FeatureError> {
    let mut values = Vec::with_capacity(d.tickers.len());
    let mut quarters = vec![0u8; d.dates.len()];
    for stock in &d.tickers {
        let mut row = Vec::with_capacity(d.dates.len());
        for (j, &date) in d.dates.iter().enumerate() {
            let rec = d.record(stock, date).ok_or_else(|| FeatureError::MissingCell {
                stock: stock.clone(),
                date,
            })?;
            if quarters[j] == 0 {
                quarters[j] = rec.quarter;
            }
            row.push(field(rec));
        }
        values.push(row);
    }
    Ok(ReturnMatrix {
        tickers: d.tickers.clone(),
        dates: d.dates.clone(),
        quarters,
        values,
    })
}

/// Weekly `percent_change_price`, one row per ticker.
pub fn pivot_returns(d: &Dataset) -> Result<ReturnMatrix, FeatureError> {
    pivot_field(d, |r| r.percent_change_price)
}

/// Weekly `percent_change_next_weeks_price`, the one-week-ahead target.
pub fn pivot_next_week_returns(d: &Dataset) -> Result<ReturnMatrix, FeatureError> {
    pivot_field(d, |r| r.percent_change_next_weeks_price)
}

pub fn market_values(d: &Dataset) -> Result<MarketValueTable, FeatureError> {
    let m = pivot_field(d, |r| r.close * r.volume as f64)?;
    Ok(PanelTable {
        tickers: m.tickers,
        dates: m.dates,
        values: m.values,
    })
}

fn check_axes(r: &ReturnMatrix, mv: &MarketValueTable) -> Result<(), FeatureError> {
    if r.same_axes(mv) && r.values.len() == mv.values.len() {
        Ok(())
    } else {
        Err(FeatureError::MisalignedAxes)
    }
}

/// Value-weighted cross-sectional mean return per week.
pub fn compute_mkt(r: &ReturnMatrix, mv: &MarketValueTable) -> Result<Vec<f64>, FeatureError> {
    check_axes(r, mv)?;
    (0..r.dates.len())
        .map(|j| {
            let total: f64 = mv.values.iter().map(|row| row[j]).sum();
            if total <= 0.0 {
                return Err(FeatureError::DegenerateWeek {
                    date: r.dates[j],
                    reason: "total market value is zero".into(),
                });
            }
            Ok(r.values
                .iter()
                .zip(&mv.values)
                .map(|(ret, w)| w[j] / total * ret[j])
                .sum())
        })
        .collect()
}

/// Small-minus-big spread per week.
///
/// Tickers strictly below the week's median market value form the small
/// group, those strictly above form the big group; ties with the median sit
/// out. With an even ticker count and distinct middle values the groups have
/// equal size.
pub fn compute_smb(r: &ReturnMatrix, mv: &MarketValueTable) -> Result<Vec<f64>, FeatureError> {
    check_axes(r, mv)?;
    (0..r.dates.len())
        .map(|j| {
            let mut sizes: Vec<f64> = mv.values.iter().map(|row| row[j]).collect();
            sizes.sort_by(f64::total_cmp);
            let n = sizes.len();
            let median = if n % 2 == 1 {
                sizes[n / 2]
            } else if n == 0 {
                0.0
            } else {
                0.5 * (sizes[n / 2 - 1] + sizes[n / 2])
            };
            let (mut small, mut n_small, mut big, mut n_big) = (0.0, 0usize, 0.0, 0usize);
            for (ret, w) in r.values.iter().zip(&mv.values) {
                if w[j] < median {
                    small += ret[j];
                    n_small += 1;
                } else if w[j] > median {
                    big += ret[j];
                    n_big += 1;
                }
            }
            if n_small == 0 || n_big == 0 {
                return Err(FeatureError::DegenerateWeek {
                    date: r.dates[j],
                    reason: "market values do not split at the median".into(),
                });
            }
            Ok(small / n_small as f64 - big / n_big as f64)
        })
        .collect()
}

/// A date-indexed series read from a two-column `date,value` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalSeries {
    pub values: BTreeMap<NaiveDate, f64>,
}

impl ExternalSeries {
    pub fn parse_str(text: &str, origin: &str) -> Result<Self, FeatureError> {
        let fail = |reason: String| FeatureError::FactorFile {
            path: origin.to_string(),
            reason,
        };
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (date, value) = line
                .split_once(',')
                .ok_or_else(|| fail(format!("line {}: expected `date,value`", lineno + 1)))?;
            let Some(date) = parse_date(date) else {
                if values.is_empty() && lineno == 0 {
                    // header row
                    continue;
                }
                return Err(fail(format!("line {}: bad date {date:?}", lineno + 1)));
            };
            let value: f64 = value
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| fail(format!("line {}: bad value {value:?}", lineno + 1)))?;
            values.insert(date, value);
        }
        Ok(ExternalSeries { values })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| FeatureError::FactorFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse_str(&text, &path.display().to_string())
    }

    /// Values on the given axis; every date must be present.
    pub fn align(&self, dates: &[NaiveDate], origin: &str) -> Result<Vec<f64>, FeatureError> {
        dates
            .iter()
            .map(|d| {
                self.values.get(d).copied().ok_or_else(|| FeatureError::FactorFile {
                    path: origin.to_string(),
                    reason: format!("no value for {d}"),
                })
            })
            .collect()
    }
}

/// Optional externally supplied series.
#[derive(Debug, Clone, Default)]
pub struct ExternalFactors {
    pub risk_free: Option<ExternalSeries>,
    pub hml: Option<ExternalSeries>,
    pub index: Option<ExternalSeries>,
}

/// Returns `(index_return, total_volume)`.
///
/// Without an external index file the index return is the value-weighted
/// mean return, identical to MKT.
pub fn compute_index_and_volume(
    d: &Dataset,
    r: &ReturnMatrix,
    mv: &MarketValueTable,
    external_index: Option<&ExternalSeries>,
) -> Result<(Vec<f64>, Vec<f64>), FeatureError> {
    let index_return = match external_index {
        Some(series) => series.align(&r.dates, "index")?,
        None => compute_mkt(r, mv)?,
    };
    let volume = pivot_field(d, |rec| rec.volume as f64)?;
    let total_volume = (0..volume.dates.len())
        .map(|j| volume.values.iter().map(|row| row[j]).sum())
        .collect();
    Ok((index_return, total_volume))
}

/// Per-week common factors, all in percent except volume (shares).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSeries {
    pub dates: Vec<NaiveDate>,
    pub mkt: Vec<f64>,
    pub smb: Vec<f64>,
    pub hml: Vec<f64>,
    pub index_return: Vec<f64>,
    pub total_volume: Vec<f64>,
    pub risk_free: Vec<f64>,
}

impl FactorSeries {
    pub fn build(
        d: &Dataset,
        r: &ReturnMatrix,
        mv: &MarketValueTable,
        external: &ExternalFactors,
    ) -> Result<Self, FeatureError> {
        let mkt = compute_mkt(r, mv)?;
        let smb = compute_smb(r, mv)?;
        let (index_return, total_volume) =
            compute_index_and_volume(d, r, mv, external.index.as_ref())?;
        let zeros = || vec![0.0; r.dates.len()];
        let hml = match &external.hml {
            Some(s) => s.align(&r.dates, "hml")?,
            None => zeros(),
        };
        let risk_free = match &external.risk_free {
            Some(s) => s.align(&r.dates, "risk-free")?,
            None => zeros(),
        };
        Ok(FactorSeries {
            dates: r.dates.clone(),
            mkt,
            smb,
            hml,
            index_return,
            total_volume,
            risk_free,
        })
    }
}

/// Elementwise natural logarithm of a strictly positive series.
pub fn log_transform(prices: &[f64]) -> Result<Vec<f64>, FeatureError> {
    prices
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 {
                Ok(value.ln())
            } else {
                Err(FeatureError::NonPositiveInput { index, value })
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; the maximum lands in the last
/// bin. A constant series yields a single zero-width bin holding every value.
pub fn histogram(series: &[f64], bin_count: usize) -> Result<Vec<Bin>, FeatureError> {
    if series.is_empty() {
        return Err(FeatureError::EmptySeries);
    }
    if bin_count == 0 {
        return Err(FeatureError::ZeroBins);
    }
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![Bin {
            lower: min,
            upper: max,
            count: series.len(),
        }]);
    }
    let width = (max - min) / bin_count as f64;
    let mut bins: Vec<Bin> = (0..bin_count)
        .map(|b| Bin {
            lower: min + width * b as f64,
            upper: if b + 1 == bin_count {
                max
            } else {
                min + width * (b + 1) as f64
            },
            count: 0,
        })
        .collect();
    for &x in series {
        let b = (((x - min) / width).floor() as usize).min(bin_count - 1);
        bins[b].count += 1;
    }
    Ok(bins)
}

/// Column order of the design matrix.
pub const DESIGN_COLUMNS: [&str; 5] = ["index_return", "total_volume", "smb", "mkt", "cluster"];
const VOLUME_COLUMN: usize = 1;

/// Regression inputs for one target ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub target: String,
    pub columns: Vec<String>,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub dates: Vec<NaiveDate>,
    pub quarters: Vec<u8>,
    /// `(dropped, duplicate_of)` for columns identical to an earlier one.
    pub dropped: Vec<(String, String)>,
    volume_column: Option<usize>,
    raw_volume: Vec<f64>,
}

impl DesignMatrix {
    /// Re-standardizes the volume column to zero mean and unit variance over
    /// `rows` (typically the training rows), applying the same affine map to
    /// every row. A zero-variance column is only centered.
    pub fn standardize_volume(&mut self, rows: &[usize]) {
        let n = rows.len().max(1) as f64;
        let mean = rows.iter().map(|&i| self.raw_volume[i]).sum::<f64>() / n;
        let var = rows
            .iter()
            .map(|&i| (self.raw_volume[i] - mean).powi(2))
            .sum::<f64>()
            / n;
        let sd = var.sqrt();
        let Some(col) = self.volume_column else {
            return;
        };
        for (i, &v) in self.raw_volume.iter().enumerate() {
            let centered = v - mean;
            self.x[(i, col)] = if sd > 0.0 { centered / sd } else { centered };
        }
    }
}

/// Builds `[index_return, total_volume (standardized), smb, mkt, cluster]`
/// against the target's next-week return. `next_week` is the pivot of
/// `percent_change_next_weeks_price`; weeks with a non-finite target are
/// dropped. A column identical to an earlier one on the kept weeks (MKT
/// when no external index is supplied) is left out and listed in
/// `dropped`. Volume is standardized over all kept rows; call
/// [`DesignMatrix::standardize_volume`] to refit on training rows.
pub fn build_design_matrix(
    next_week: &ReturnMatrix,
    f: &FactorSeries,
    cluster_feature: &[f64],
    target_ticker: &str,
) -> Result<DesignMatrix, FeatureError> {
    let target = next_week.row(target_ticker)?;
    let weeks = next_week.dates.len();
    if f.dates != next_week.dates || cluster_feature.len() != weeks {
        return Err(FeatureError::MisalignedAxes);
    }
    let kept: Vec<usize> = (0..weeks).filter(|&t| target[t].is_finite()).collect();
    let sources: [&[f64]; 5] = [
        &f.index_return,
        &f.total_volume,
        &f.smb,
        &f.mkt,
        cluster_feature,
    ];
    let same = |a: usize, b: usize| kept.iter().all(|&t| sources[a][t] == sources[b][t]);
    let mut used: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    for (c, name) in DESIGN_COLUMNS.iter().enumerate() {
        match used.iter().find(|&&u| same(u, c)) {
            Some(&u) => dropped.push((name.to_string(), DESIGN_COLUMNS[u].to_string())),
            None => used.push(c),
        }
    }
    let mut data = Vec::with_capacity(kept.len() * used.len());
    for &t in &kept {
        data.extend(used.iter().map(|&c| sources[c][t]));
    }
    let mut dm = DesignMatrix {
        target: target_ticker.to_string(),
        columns: used.iter().map(|&c| DESIGN_COLUMNS[c].to_string()).collect(),
        x: Matrix::from_vec(kept.len(), used.len(), data),
        y: kept.iter().map(|&t| target[t]).collect(),
        dates: kept.iter().map(|&t| next_week.dates[t]).collect(),
        quarters: kept.iter().map(|&t| next_week.quarters[t]).collect(),
        dropped,
        volume_column: used.iter().position(|&c| c == VOLUME_COLUMN),
        raw_volume: kept.iter().map(|&t| f.total_volume[t]).collect(),
    };
    let all: Vec<usize> = (0..kept.len()).collect();
    dm.standardize_volume(&all);
    Ok(dm)
}

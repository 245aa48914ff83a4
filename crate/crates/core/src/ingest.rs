//! Loading and cleaning of the weekly Dow Jones Index dataset.
//!
//! The raw file is comma-separated with a header row naming the 16 UCI
//! attributes. Dollar fields carry a leading `$`, dates are written as
//! `month/day/year`, and the two "previous week" fields are blank on each
//! stock's first week.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

/// Attribute names of the UCI file, in file order.
pub const ATTRIBUTES: [&str; 16] = [
    "quarter",
    "stock",
    "date",
    "open",
    "high",
    "low",
    "close",
    "volume",
    "percent_change_price",
    "percent_change_volume_over_last_wk",
    "previous_weeks_volume",
    "next_weeks_open",
    "next_weeks_close",
    "percent_change_next_weeks_price",
    "days_to_next_dividend",
    "percent_return_next_dividend",
];

/// Maximum tolerated gap, in percentage points, between the stated
/// `percent_change_price` and the one implied by open and close.
pub const PRICE_CHANGE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("header is missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: field `{field}` is malformed: {value:?}")]
    MalformedRow {
        /// 1-based data row index (the header is row 0).
        row: usize,
        field: String,
        value: String,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("conflicting records for {stock} on {date}")]
    ConflictingRecords { stock: String, date: NaiveDate },
    #[error("incomplete panel: {missing} (ticker, date) pairs have no record, first is {first_stock} on {first_date}")]
    IncompleteGrid {
        missing: usize,
        first_stock: String,
        first_date: NaiveDate,
    },
}

/// One row of the dataset, typed and unit-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyRecord {
    pub quarter: u8,
    pub stock: String,
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: u64,
    pub percent_change_price: f64,
    pub percent_change_volume_over_last_wk: Option<f64>,
    pub previous_weeks_volume: Option<u64>,
    pub next_weeks_open: f64,
    pub next_weeks_close: f64,
    pub percent_change_next_weeks_price: f64,
    pub days_to_next_dividend: i64,
    pub percent_return_next_dividend: f64,
}

impl WeeklyRecord {
    /// Percent change from open to close implied by the prices.
    pub fn implied_percent_change(&self) -> f64 {
        100.0 * (self.close - self.open) / self.open
    }
}

/// A data row whose field count disagrees with the header.
#[derive(Debug, Clone, PartialEq)]
pub struct RaggedRow {
    pub row: usize,
    pub fields: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Sorted by `(stock, date)`.
    pub records: Vec<WeeklyRecord>,
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Column count of the header row.
    pub attribute_count: usize,
    /// Rows that could not be typed because their width differs from the header.
    pub ragged_rows: Vec<RaggedRow>,
    /// Exact duplicates dropped by [`dedup`] so far.
    pub duplicates_removed: usize,
}

impl Dataset {
    /// Builds a dataset from typed records, sorting them and deriving the
    /// ticker and date axes.
    pub fn from_records(mut records: Vec<WeeklyRecord>) -> Self {
        records.sort_by(|a, b| (&a.stock, a.date).cmp(&(&b.stock, b.date)));
        let tickers: BTreeSet<&String> = records.iter().map(|r| &r.stock).collect();
        let dates: BTreeSet<NaiveDate> = records.iter().map(|r| r.date).collect();
        Dataset {
            tickers: tickers.into_iter().cloned().collect(),
            dates: dates.into_iter().collect(),
            records,
            attribute_count: ATTRIBUTES.len(),
            ragged_rows: Vec::new(),
            duplicates_removed: 0,
        }
    }

    pub fn record(&self, stock: &str, date: NaiveDate) -> Option<&WeeklyRecord> {
        self.records
            .binary_search_by(|r| (r.stock.as_str(), r.date).cmp(&(stock, date)))
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn records_for<'a>(&'a self, stock: &'a str) -> impl Iterator<Item = &'a WeeklyRecord> + 'a {
        self.records.iter().filter(move |r| r.stock == stock)
    }
}

/// Parses a dollar amount such as `$15.82` or `$1,234.50`.
///
/// A leading `$` and correctly grouped thousands separators are accepted;
/// anything else is rejected.
pub fn parse_dollars(text: &str) -> Option<f64> {
    let s = text.trim();
    let s = s.strip_prefix('$').unwrap_or(s);
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    if int_part.is_empty() {
        return None;
    }
    let digits: String = if int_part.contains(',') {
        let groups: Vec<&str> = int_part.split(',').collect();
        let head_ok = (1..=3).contains(&groups[0].len());
        let tail_ok = groups[1..].iter().all(|g| g.len() == 3);
        if !head_ok || !tail_ok {
            return None;
        }
        groups.concat()
    } else {
        int_part.to_string()
    };
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut normalized = digits;
    if let Some(frac) = frac_part {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        normalized.push('.');
        normalized.push_str(frac);
    }
    normalized.parse().ok()
}

/// Parses `month/day/year`, falling back to ISO `year-month-day`.
pub fn parse_date(text: &str) -> Option<NaiveDate> {
    let s = text.trim();
    NaiveDate::parse_from_str(s, "%m/%d/%Y")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y-%m-%d"))
        .ok()
}

fn parse_number(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

struct RowParser<'a> {
    row: usize,
    fields: &'a csv::StringRecord,
    columns: &'a [usize; 16],
}

impl RowParser<'_> {
    fn raw(&self, attr: usize) -> &str {
        self.fields.get(self.columns[attr]).unwrap_or("")
    }

    fn malformed(&self, attr: usize) -> IngestError {
        IngestError::MalformedRow {
            row: self.row,
            field: ATTRIBUTES[attr].to_string(),
            value: self.raw(attr).to_string(),
        }
    }

    fn dollars(&self, attr: usize) -> Result<f64, IngestError> {
        parse_dollars(self.raw(attr)).ok_or_else(|| self.malformed(attr))
    }

    fn number(&self, attr: usize) -> Result<f64, IngestError> {
        parse_number(self.raw(attr)).ok_or_else(|| self.malformed(attr))
    }

    fn optional_number(&self, attr: usize) -> Result<Option<f64>, IngestError> {
        if self.raw(attr).trim().is_empty() {
            Ok(None)
        } else {
            self.number(attr).map(Some)
        }
    }

    fn count(&self, attr: usize) -> Result<u64, IngestError> {
        self.raw(attr).trim().parse().map_err(|_| self.malformed(attr))
    }

    fn optional_count(&self, attr: usize) -> Result<Option<u64>, IngestError> {
        if self.raw(attr).trim().is_empty() {
            Ok(None)
        } else {
            self.count(attr).map(Some)
        }
    }

    fn record(&self) -> Result<WeeklyRecord, IngestError> {
        let quarter: u8 = self.raw(0).trim().parse().map_err(|_| self.malformed(0))?;
        if !(1..=2).contains(&quarter) {
            return Err(self.malformed(0));
        }
        let stock = self.raw(1).trim().to_string();
        if stock.is_empty() {
            return Err(self.malformed(1));
        }
        let date = parse_date(self.raw(2)).ok_or_else(|| self.malformed(2))?;
        let open = self.dollars(3)?;
        let high = self.dollars(4)?;
        let low = self.dollars(5)?;
        let close = self.dollars(6)?;
        if open <= 0.0 {
            return Err(self.malformed(3));
        }
        if low > high {
            return Err(self.malformed(5));
        }
        if close <= 0.0 {
            return Err(self.malformed(6));
        }
        Ok(WeeklyRecord {
            quarter,
            stock,
            date,
            open,
            high,
            low,
            close,
            volume: self.count(7)?,
            percent_change_price: self.number(8)?,
            percent_change_volume_over_last_wk: self.optional_number(9)?,
            previous_weeks_volume: self.optional_count(10)?,
            next_weeks_open: self.dollars(11)?,
            next_weeks_close: self.dollars(12)?,
            percent_change_next_weeks_price: self.number(13)?,
            days_to_next_dividend: self.raw(14).trim().parse().map_err(|_| self.malformed(14))?,
            percent_return_next_dividend: self.number(15)?,
        })
    }
}

/// Parses dataset text. Records come back sorted by `(stock, date)`;
/// duplicates are kept (see [`dedup`]).
pub fn parse_str(text: &str) -> Result<Dataset, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let mut columns = [0usize; 16];
    for (slot, name) in columns.iter_mut().zip(ATTRIBUTES) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))?;
    }

    let mut records = Vec::new();
    let mut ragged_rows = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let index = i + 1;
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        if row.len() != header.len() {
            ragged_rows.push(RaggedRow {
                row: index,
                fields: row.len(),
            });
            continue;
        }
        let parser = RowParser {
            row: index,
            fields: &row,
            columns: &columns,
        };
        records.push(parser.record()?);
    }

    let mut dataset = Dataset::from_records(records);
    dataset.attribute_count = header.len();
    dataset.ragged_rows = ragged_rows;
    Ok(dataset)
}

pub fn parse_dataset(path: impl AsRef<Path>) -> Result<Dataset, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}

/// Removes exact duplicate records, keeping the first occurrence.
pub fn dedup(mut d: Dataset) -> Dataset {
    let before = d.records.len();
    let mut kept: Vec<WeeklyRecord> = Vec::with_capacity(before);
    let mut group_start = 0;
    for rec in d.records.drain(..) {
        if kept
            .last()
            .is_some_and(|last| last.stock != rec.stock || last.date != rec.date)
        {
            group_start = kept.len();
        }
        if !kept[group_start..].contains(&rec) {
            kept.push(rec);
        }
    }
    d.duplicates_removed += before - kept.len();
    d.records = kept;
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: usize,
    pub tickers: usize,
    pub weeks: usize,
    pub attributes: usize,
    pub duplicates_removed: usize,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Dataset validation");
        let _ = writeln!(out, "  rows:               {}", self.rows);
        let _ = writeln!(out, "  attributes:         {}", self.attributes);
        let _ = writeln!(out, "  tickers:            {}", self.tickers);
        let _ = writeln!(out, "  weeks:              {}", self.weeks);
        let _ = writeln!(out, "  duplicates removed: {}", self.duplicates_removed);
        let _ = writeln!(out, "  warnings:           {}", self.warnings.len());
        for w in &self.warnings {
            let _ = writeln!(out, "    - {w}");
        }
        out
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rows={}", self.rows);
        let _ = writeln!(out, "attributes={}", self.attributes);
        let _ = writeln!(out, "tickers={}", self.tickers);
        let _ = writeln!(out, "weeks={}", self.weeks);
        let _ = writeln!(out, "duplicates_removed={}", self.duplicates_removed);
        let _ = writeln!(out, "warnings={}", self.warnings.len());
        for (i, w) in self.warnings.iter().enumerate() {
            let _ = writeln!(out, "warning.{i}={w}");
        }
        out
    }
}

/// Checks schema width and panel completeness, collecting soft warnings.
pub fn validate(d: &Dataset) -> Result<ValidationReport, ValidationError> {
    if d.attribute_count != ATTRIBUTES.len() {
        return Err(ValidationError::SchemaViolation(format!(
            "header has {} attributes, expected {}",
            d.attribute_count,
            ATTRIBUTES.len()
        )));
    }
    if let Some(r) = d.ragged_rows.first() {
        return Err(ValidationError::SchemaViolation(format!(
            "row {} has {} attributes, expected {}",
            r.row,
            r.fields,
            ATTRIBUTES.len()
        )));
    }
    for pair in d.records.windows(2) {
        if pair[0].stock == pair[1].stock && pair[0].date == pair[1].date {
            return Err(ValidationError::ConflictingRecords {
                stock: pair[1].stock.clone(),
                date: pair[1].date,
            });
        }
    }
    let expected = d.tickers.len() * d.dates.len();
    if d.records.len() != expected {
        let (first_stock, first_date) = d
            .tickers
            .iter()
            .flat_map(|t| d.dates.iter().map(move |&dt| (t, dt)))
            .find(|(t, dt)| d.record(t, *dt).is_none())
            .map(|(t, dt)| (t.clone(), dt))
            .expect("a missing pair exists when the panel is short");
        return Err(ValidationError::IncompleteGrid {
            missing: expected - d.records.len(),
            first_stock,
            first_date,
        });
    }

    let mut warnings = Vec::new();
    let mut previous_stock: Option<&str> = None;
    for rec in &d.records {
        let first_week = previous_stock != Some(rec.stock.as_str());
        previous_stock = Some(rec.stock.as_str());

        let gap = (rec.implied_percent_change() - rec.percent_change_price).abs();
        if gap > PRICE_CHANGE_TOLERANCE {
            warnings.push(format!(
                "{} {}: percent_change_price {} differs from open/close change by {:.4} points",
                rec.stock, rec.date, rec.percent_change_price, gap
            ));
        }
        let missing_optional = rec.percent_change_volume_over_last_wk.is_none()
            || rec.previous_weeks_volume.is_none();
        if missing_optional && !first_week {
            warnings.push(format!(
                "{} {}: previous-week fields absent outside the first week",
                rec.stock, rec.date
            ));
        }
    }

    Ok(ValidationReport {
        rows: d.records.len(),
        tickers: d.tickers.len(),
        weeks: d.dates.len(),
        attributes: d.attribute_count,
        duplicates_removed: d.duplicates_removed,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "quarter,stock,date,open,high,low,close,volume,percent_change_price,percent_change_volume_over_last_wk,previous_weeks_volume,next_weeks_open,next_weeks_close,percent_change_next_weeks_price,days_to_next_dividend,percent_return_next_dividend";
    const AA_1: &str = "1,AA,1/7/2011,$15.82,$16.72,$15.78,$16.42,239655616,3.79267,,,$16.71,$15.97,-4.42849,26,0.182704";
    const AA_2: &str = "1,AA,1/14/2011,$16.71,$16.71,$15.64,$15.97,242963398,-4.42849,1.380223028,239655616,$16.19,$15.79,-2.47066,19,0.187852";

    fn text(rows: &[&str]) -> String {
        let mut s = String::from(HEADER);
        for r in rows {
            s.push('\n');
            s.push_str(r);
        }
        s.push('\n');
        s
    }

    #[test]
    fn first_row_fields() {
        let d = parse_str(&text(&[AA_1])).unwrap();
        let r = &d.records[0];
        assert_eq!(r.open, 15.82);
        assert_eq!(r.close, 16.42);
        assert_eq!(r.date, NaiveDate::from_ymd_opt(2011, 1, 7).unwrap());
        assert_eq!(r.volume, 239_655_616);
        assert_eq!(r.percent_change_volume_over_last_wk, None);
        assert_eq!(r.previous_weeks_volume, None);
        assert_eq!(r.percent_change_next_weeks_price, -4.42849);
    }

    #[test]
    fn dollar_formats() {
        assert_eq!(parse_dollars("$15.82"), Some(15.82));
        assert_eq!(parse_dollars("15.82"), Some(15.82));
        assert_eq!(parse_dollars("$1,234.50"), Some(1234.5));
        assert_eq!(parse_dollars("$12"), Some(12.0));
        assert_eq!(parse_dollars("$1,23.50"), None);
        assert_eq!(parse_dollars("€15.82"), None);
        assert_eq!(parse_dollars("$-3.00"), None);
        assert_eq!(parse_dollars("$"), None);
        assert_eq!(parse_dollars("$15."), None);
    }

    #[test]
    fn malformed_field_is_named() {
        let bad = AA_1.replace("$16.42", "sixteen");
        match parse_str(&text(&[&bad])) {
            Err(IngestError::MalformedRow { row, field, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(field, "close");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column() {
        let header = HEADER.replace(",volume,", ",vol,");
        let err = parse_str(&format!("{header}\n{AA_1}\n")).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "volume"));
    }

    #[test]
    fn records_sorted_by_stock_then_date() {
        let later = "1,AA,1/21/2011,$16.19,$16.38,$15.60,$15.79,138428495,-2.47066,-43.02495926,242963398,$15.87,$16.13,1.63831,12,0.189994";
        let axp = AA_1.replace(",AA,", ",AXP,");
        let d = parse_str(&text(&[&axp, later, AA_2, AA_1])).unwrap();
        let keys: Vec<_> = d.records.iter().map(|r| (r.stock.clone(), r.date)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(d.tickers, vec!["AA", "AXP"]);
        assert_eq!(d.dates.len(), 3);
    }

    #[test]
    fn dedup_cases() {
        let d = parse_str(&text(&[AA_1, AA_2, AA_1])).unwrap();
        let once = dedup(d);
        assert_eq!(once.records.len(), 2);
        assert_eq!(once.duplicates_removed, 1);

        let clean = parse_str(&text(&[AA_1, AA_2])).unwrap();
        assert_eq!(dedup(clean.clone()), clean);

        let copies = parse_str(&text(&[AA_1; 7])).unwrap();
        let one = dedup(copies);
        assert_eq!(one.records.len(), 1);
        assert_eq!(one.duplicates_removed, 6);
    }

    #[test]
    fn dedup_keeps_near_duplicates_for_validate() {
        let tweak = AA_1.replace("3.79267", "3.79");
        let d = dedup(parse_str(&text(&[AA_1, &tweak])).unwrap());
        assert_eq!(d.records.len(), 2);
        assert!(matches!(
            validate(&d),
            Err(ValidationError::ConflictingRecords { .. })
        ));
    }

    #[test]
    fn short_row_is_schema_violation() {
        let short = AA_2.rsplit_once(',').unwrap().0;
        let d = parse_str(&text(&[AA_1, short])).unwrap();
        assert_eq!(d.ragged_rows, vec![RaggedRow { row: 2, fields: 15 }]);
        assert!(matches!(
            validate(&d),
            Err(ValidationError::SchemaViolation(_))
        ));
    }

    #[test]
    fn extra_header_column_is_schema_violation() {
        let t = format!("{HEADER},extra\n{AA_1},1\n");
        let d = parse_str(&t).unwrap();
        assert_eq!(d.attribute_count, 17);
        assert!(matches!(
            validate(&d),
            Err(ValidationError::SchemaViolation(_))
        ));
    }

    #[test]
    fn incomplete_grid_is_rejected() {
        let axp = AA_1.replace(",AA,", ",AXP,");
        let d = parse_str(&text(&[AA_1, AA_2, &axp])).unwrap();
        match validate(&d) {
            Err(ValidationError::IncompleteGrid {
                missing,
                first_stock,
                ..
            }) => {
                assert_eq!(missing, 1);
                assert_eq!(first_stock, "AXP");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn consistency_warning() {
        let off = AA_2.replace("-4.42849,1.38", "-4.30000,1.38");
        let d = parse_str(&text(&[AA_1, &off])).unwrap();
        let report = validate(&d).unwrap();
        assert_eq!(report.warnings.len(), 1, "{:?}", report.warnings);
        assert!(report.warnings[0].contains("percent_change_price"));

        let d = parse_str(&text(&[AA_1, AA_2])).unwrap();
        assert!(validate(&d).unwrap().warnings.is_empty());
    }

    #[test]
    fn absent_optional_outside_first_week_warns() {
        let blank = AA_2.replace("1.380223028,239655616", ",");
        let d = parse_str(&text(&[AA_1, &blank])).unwrap();
        let report = validate(&d).unwrap();
        assert_eq!(report.rows, 2);
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].contains("previous-week"));
    }

    #[test]
    fn quarter_out_of_range_is_malformed() {
        let bad = AA_1.replacen("1,AA", "3,AA", 1);
        assert!(matches!(
            parse_str(&text(&[&bad])),
            Err(IngestError::MalformedRow { field, .. }) if field == "quarter"
        ));
    }

    #[test]
    fn report_renderings() {
        let d = parse_str(&text(&[AA_1, AA_2])).unwrap();
        let r = validate(&d).unwrap();
        assert!(r.to_kv().contains("rows=2\n"));
        assert!(r.to_kv().contains("attributes=16\n"));
        assert!(r.to_text().contains("tickers:            1"));
    }

    proptest! {
        #[test]
        fn dollars_roundtrip_at_cent_precision(cents in 1u64..100_000_000) {
            let text = format!("${}.{:02}", cents / 100, cents % 100);
            let parsed = parse_dollars(&text).unwrap();
            prop_assert_eq!(format!("${parsed:.2}"), text);
        }

        #[test]
        fn dedup_idempotent(picks in proptest::collection::vec(0usize..3, 0..12)) {
            let rows = [AA_1, AA_2, "1,AA,1/21/2011,$16.19,$16.38,$15.60,$15.79,138428495,-2.47066,-43.02495926,242963398,$15.87,$16.13,1.63831,12,0.189994"];
            let chosen: Vec<&str> = picks.iter().map(|&i| rows[i]).collect();
            let once = dedup(parse_str(&text(&chosen)).unwrap());
            let twice = dedup(once.clone());
            prop_assert_eq!(&once, &twice);
            let distinct: BTreeSet<usize> = picks.iter().copied().collect();
            prop_assert_eq!(once.records.len(), distinct.len());
        }
    }
}

//! Daily closing prices to labelled, normalized trend windows with a
//! chronological 80/20 split.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fraction of rows held out for testing.
pub const TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub close: f64,
}

/// Closing prices of one ticker in strictly increasing date order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub symbol: String,
    pub entries: Vec<PricePoint>,
}

/// Parsing side information from [`load_prices`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSeries {
    pub series: PriceSeries,
    /// Rows skipped because the close was blank or `null`.
    pub dropped_rows: usize,
    /// Set when the file was not in ascending date order.
    pub resorted: bool,
}

impl PriceSeries {
    pub fn new(symbol: impl Into<String>, mut entries: Vec<PricePoint>) -> Result<(Self, bool)> {
        let resorted = entries.windows(2).any(|w| w[0].date > w[1].date);
        if resorted {
            entries.sort_by_key(|p| p.date);
        }
        if let Some(w) = entries.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::Data(format!("duplicate trading date {}", w[0].date)));
        }
        if let Some(p) = entries.iter().find(|p| !(p.close > 0.0 && p.close.is_finite())) {
            return Err(Error::Data(format!("non-positive close {} on {}", p.close, p.date)));
        }
        Ok((
            Self {
                symbol: symbol.into(),
                entries,
            },
            resorted,
        ))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.entries.iter().map(|p| p.close).collect()
    }

    /// Keeps the most recent `records` prices.
    pub fn most_recent(&self, records: usize) -> Self {
        let skip = self.entries.len().saturating_sub(records);
        Self {
            symbol: self.symbol.clone(),
            entries: self.entries[skip..].to_vec(),
        }
    }

    /// Errors unless at least `min` prices are present.
    pub fn require_len(&self, min: usize) -> Result<()> {
        if self.len() < min {
            return Err(Error::Data(format!(
                "{}: {} usable prices, need at least {min}",
                self.symbol,
                self.len()
            )));
        }
        Ok(())
    }
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("null") || f.eq_ignore_ascii_case("nan")
}

/// Reads comma-separated prices with a header row naming `Date` and `Close`.
pub fn read_prices<R: Read>(reader: R, symbol: &str, source: &Path) -> Result<LoadedSeries> {
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::DataAt {
                path: source.to_path_buf(),
                line: 1,
                message: format!("header has no `{name}` column"),
            })
    };
    let (date_col, close_col) = (column("Date")?, column("Close")?);

    let mut entries = Vec::new();
    let mut dropped = 0;
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |message: String| Error::DataAt {
            path: source.to_path_buf(),
            line,
            message,
        };
        let date_text = record.get(date_col).unwrap_or("");
        let date =
            NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|e| at(format!("bad date `{date_text}`: {e}")))?;
        let close_text = record.get(close_col).unwrap_or("");
        if is_missing(close_text) {
            dropped += 1;
            continue;
        }
        let close = close_text
            .parse::<f64>()
            .map_err(|e| at(format!("bad close `{close_text}`: {e}")))?;
        entries.push(PricePoint { date, close });
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows with missing close", source.display());
    }
    let (series, resorted) = PriceSeries::new(symbol, entries)?;
    if resorted {
        log::warn!("{}: dates were out of order and have been sorted", source.display());
    }
    Ok(LoadedSeries {
        series,
        dropped_rows: dropped,
        resorted,
    })
}

pub fn load_prices(path: impl AsRef<Path>, symbol: &str) -> Result<LoadedSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_prices(file, symbol, path)
}

/// Min–max scaling statistics, fitted on the training segment only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub min: f64,
    pub max: f64,
    /// Number of leading prices the statistics were computed from.
    pub fitted_on: usize,
}

impl NormalizationRecord {
    pub fn fit(values: &[f64]) -> Result<Self> {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() || !(max > min) {
            return Err(Error::Data(
                "degenerate price range: normalization needs at least two distinct values".into(),
            ));
        }
        Ok(Self {
            min,
            max,
            fitted_on: values.len(),
        })
    }

    /// Scaled value clamped to `[0, 1]`, and whether clamping happened.
    pub fn apply(&self, v: f64) -> (f64, bool) {
        let scaled = (v - self.min) / (self.max - self.min);
        let clamped = scaled.clamp(0.0, 1.0);
        (clamped, clamped != scaled)
    }
}

/// Raw and scaled closes side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub raw: Vec<f64>,
    pub values: Vec<f64>,
    pub record: NormalizationRecord,
    /// Values that fell outside the fitted range and were clamped.
    pub clamped: usize,
}

/// Min–max scales `closes` using statistics from the first `fit_len` entries.
pub fn normalize(closes: &[f64], fit_len: usize) -> Result<NormalizedSeries> {
    let fit_len = fit_len.min(closes.len());
    let record = NormalizationRecord::fit(&closes[..fit_len])?;
    let mut clamped = 0;
    let values = closes
        .iter()
        .map(|&v| {
            let (x, c) = record.apply(v);
            clamped += usize::from(c);
            x
        })
        .collect();
    Ok(NormalizedSeries {
        raw: closes.to_vec(),
        values,
        record,
        clamped,
    })
}

/// One labelled example: the last `H` scaled closes, most recent first, and
/// whether the next close is higher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub window: Vec<f64>,
    pub label: u8,
}

impl TrendRow {
    /// Window values oldest first, the order the recurrent blocks consume them.
    pub fn chronological(&self) -> Vec<f64> {
        self.window.iter().rev().copied().collect()
    }

    pub fn latest(&self) -> f64 {
        self.window[0]
    }
}

/// One row per `t` in `[H-1, len-2]`; labels compare raw closes so clamping
/// cannot create artificial ties. Equal closes are labelled 0.
pub fn make_rows(series: &NormalizedSeries, history_depth: usize) -> Result<Vec<TrendRow>> {
    let len = series.values.len();
    if history_depth == 0 {
        return Err(Error::Config("history depth must be at least 1".into()));
    }
    if len < history_depth + 1 {
        return Err(Error::Data(format!(
            "{len} prices cannot form a window of depth {history_depth} plus a label"
        )));
    }
    Ok((history_depth - 1..len - 1)
        .map(|t| TrendRow {
            window: (0..history_depth).map(|lag| series.values[t - lag]).collect(),
            label: u8::from(series.raw[t + 1] > series.raw[t]),
        })
        .collect())
}

/// `(train, test)` sizes for `n` rows: the last `floor(0.2·n)` rows are held out.
pub fn split_sizes(n: usize) -> Result<(usize, usize)> {
    if n < 5 {
        return Err(Error::Data(format!("{n} rows are too few for an 80/20 split (need 5)")));
    }
    let test = (TEST_FRACTION * n as f64).floor() as usize;
    Ok((n - test, test))
}

/// Chronological holdout split.
pub fn split_80_20(rows: Vec<TrendRow>) -> Result<(Vec<TrendRow>, Vec<TrendRow>)> {
    let (train, _) = split_sizes(rows.len())?;
    let mut train_rows = rows;
    let test_rows = train_rows.split_off(train);
    Ok((train_rows, test_rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub symbol: String,
    pub history_depth: usize,
    pub train: Vec<TrendRow>,
    pub test: Vec<TrendRow>,
    pub normalization: NormalizationRecord,
    pub clamped_test_values: usize,
}

impl SplitDataset {
    pub fn total_rows(&self) -> usize {
        self.train.len() + self.test.len()
    }
}

/// Normalizes, windows and splits a series without look-ahead: scaling
/// statistics come from the prices visible to the training windows.
pub fn prepare(series: &PriceSeries, history_depth: usize) -> Result<SplitDataset> {
    if history_depth == 0 {
        return Err(Error::Config("history depth must be at least 1".into()));
    }
    series.require_len(history_depth + 2)?;
    let closes = series.closes();
    let rows = closes.len() - history_depth;
    let (n_train, _) = split_sizes(rows)?;
    // The last training row sits at t = H-2+n_train; its window ends there.
    let fit_len = history_depth - 1 + n_train;
    let normalized = normalize(&closes, fit_len)?;
    let (train, test) = split_80_20(make_rows(&normalized, history_depth)?)?;
    Ok(SplitDataset {
        symbol: series.symbol.clone(),
        history_depth,
        train,
        test,
        normalization: normalized.record,
        clamped_test_values: normalized.clamped,
    })
}

fn row_header(history_depth: usize) -> Vec<String> {
    let mut header: Vec<String> = (0..history_depth)
        .map(|lag| {
            if lag == 0 {
                "x(t)".to_string()
            } else {
                format!("x(t-{lag})")
            }
        })
        .collect();
    header.push("y(t)".into());
    header
}

/// Writes rows as `x(t),x(t-1),…,y(t)`, preceded by `# `-prefixed comment lines.
pub fn write_rows<W: Write>(mut out: W, rows: &[TrendRow], history_depth: usize, comments: &[String]) -> Result<()> {
    let io = |e| Error::io("<rows>", e);
    for c in comments {
        writeln!(out, "# {c}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(row_header(history_depth))?;
    for row in rows {
        let mut fields: Vec<String> = row.window.iter().map(|v| v.to_string()).collect();
        fields.push(row.label.to_string());
        w.write_record(&fields)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Reads rows written by [`write_rows`]; `#` lines are skipped.
pub fn read_rows<R: Read>(reader: R, source: &Path) -> Result<Vec<TrendRow>> {
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let width = csv.headers()?.len();
    if width < 2 {
        return Err(Error::DataAt {
            path: source.to_path_buf(),
            line: 1,
            message: "row file needs at least one window column and a label".into(),
        });
    }
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let at = |message: String| Error::DataAt {
            path: source.to_path_buf(),
            line,
            message,
        };
        let values: Vec<f64> = record
            .iter()
            .take(width - 1)
            .map(|f| f.parse::<f64>().map_err(|e| at(format!("bad value `{f}`: {e}"))))
            .collect::<Result<_>>()?;
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(at(format!("window value {v} outside [0, 1]")));
        }
        let label = match record.get(width - 1) {
            Some("0") => 0,
            Some("1") => 1,
            other => return Err(at(format!("label must be 0 or 1, got {other:?}"))),
        };
        rows.push(TrendRow { window: values, label });
    }
    Ok(rows)
}

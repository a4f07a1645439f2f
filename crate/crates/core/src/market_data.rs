//! Per-ticker OHLCV ingestion and multi-ticker date alignment.
//!
//! One CSV file per ticker with header
//! `Date,Open,High,Low,Close,Adj Close,Volume`, ISO dates and `.` decimals.

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "Date",
    "Open",
    "High",
    "Low",
    "Close",
    "Adj Close",
    "Volume",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhlcvRow {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: u64,
}

impl OhlcvRow {
    pub fn field(&self, field: PriceField) -> f64 {
        match field {
            PriceField::Close => self.close,
            PriceField::AdjClose => self.adj_close,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhlcvSeries {
    pub ticker: String,
    pub rows: Vec<OhlcvRow>,
}

/// Which price column feeds the panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceField {
    #[default]
    Close,
    AdjClose,
}

impl std::str::FromStr for PriceField {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "close" => Ok(PriceField::Close),
            "adj_close" | "adj-close" => Ok(PriceField::AdjClose),
            other => Err(Error::Config(format!("unknown price field {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignPolicy {
    /// Keep only dates present in every series.
    #[default]
    Intersect,
    /// Union of dates from the latest first date onward, gaps filled with the
    /// previous available price.
    ForwardFill,
}

impl std::str::FromStr for AlignPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersect" => Ok(AlignPolicy::Intersect),
            "ffill" | "forward_fill" | "forward-fill" => Ok(AlignPolicy::ForwardFill),
            other => Err(Error::Config(format!("unknown alignment policy {other:?}"))),
        }
    }
}

impl OhlcvSeries {
    pub fn closes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.rows.iter().map(|r| r.date).collect()
    }

    fn validate(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            if w[0].date == w[1].date {
                return Err(Error::DuplicateDate {
                    ticker: self.ticker.clone(),
                    date: w[1].date,
                });
            }
        }
        for r in &self.rows {
            for v in [r.open, r.high, r.low, r.close, r.adj_close] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::NonPositivePrice {
                        ticker: self.ticker.clone(),
                        date: r.date,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Loads one ticker file; the ticker is the file stem.
pub fn load_ohlcv_csv(path: impl AsRef<Path>) -> Result<OhlcvSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let ticker = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    parse_ohlcv(file, &ticker, path)
}

pub fn parse_ohlcv(reader: impl Read, ticker: &str, source: &Path) -> Result<OhlcvSeries> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(parse_err(
            1,
            format!(
                "expected header {:?}, got {:?}",
                CSV_HEADER.join(","),
                header
            ),
        ));
    }

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let text = |i: usize| record.get(i).unwrap_or("").trim();
        let num = |i: usize| -> Result<f64> {
            text(i)
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("bad {} value {:?}", CSV_HEADER[i], text(i))))
        };
        let date = NaiveDate::parse_from_str(text(0), "%Y-%m-%d")
            .map_err(|_| parse_err(line, format!("bad date {:?}", text(0))))?;
        let volume = text(6)
            .parse::<u64>()
            .map_err(|_| parse_err(line, format!("bad Volume value {:?}", text(6))))?;
        let row = OhlcvRow {
            date,
            open: num(1)?,
            high: num(2)?,
            low: num(3)?,
            close: num(4)?,
            adj_close: num(5)?,
            volume,
        };
        for v in [row.open, row.high, row.low, row.close, row.adj_close] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonPositivePrice {
                    ticker: ticker.to_string(),
                    date,
                    value: v,
                });
            }
        }
        rows.push(row);
    }
    rows.sort_by_key(|r| r.date);
    let series = OhlcvSeries {
        ticker: ticker.to_string(),
        rows,
    };
    series.validate()?;
    Ok(series)
}

pub fn write_ohlcv_csv(series: &OhlcvSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ohlcv(series, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn write_ohlcv(series: &OhlcvSeries, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    for r in &series.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.date.format("%Y-%m-%d"),
            r.open,
            r.high,
            r.low,
            r.close,
            r.adj_close,
            r.volume
        )?;
    }
    out.flush()
}

/// Loads `<dir>/<ticker>.csv` for every ticker, in order.
pub fn load_dir(dir: impl AsRef<Path>, tickers: &[String]) -> Result<Vec<OhlcvSeries>> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "data directory not found"),
        ));
    }
    tickers
        .iter()
        .map(|t| load_ohlcv_csv(dir.join(format!("{t}.csv"))))
        .collect()
}

/// Dense close-price matrix, one row per trading date and one column per ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePanel {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    closes: Matrix,
}

impl PricePanel {
    pub fn new(tickers: Vec<String>, dates: Vec<NaiveDate>, closes: Matrix) -> Result<Self> {
        if closes.shape() != (dates.len(), tickers.len()) {
            return Err(Error::Invalid(format!(
                "panel shape {:?} does not match {} dates x {} tickers",
                closes.shape(),
                dates.len(),
                tickers.len()
            )));
        }
        let mut seen = HashSet::new();
        for t in &tickers {
            if !seen.insert(t) {
                return Err(Error::DuplicateTicker(t.clone()));
            }
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(
                "panel dates must be strictly increasing".into(),
            ));
        }
        for (i, &v) in closes.as_slice().iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                let (r, c) = (i / tickers.len(), i % tickers.len());
                return Err(Error::NonPositivePrice {
                    ticker: tickers[c].clone(),
                    date: dates[r],
                    value: v,
                });
            }
        }
        Ok(Self {
            tickers,
            dates,
            closes,
        })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &Matrix {
        &self.closes
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn column(&self, ticker: &str) -> Option<Vec<f64>> {
        self.ticker_index(ticker)
            .map(|c| self.closes.column(c).collect())
    }

    /// Row index of the first date on or after `date`.
    pub fn first_on_or_after(&self, date: NaiveDate) -> Option<usize> {
        let i = self.dates.partition_point(|d| *d < date);
        (i < self.dates.len()).then_some(i)
    }

    /// Row index of the last date on or before `date`.
    pub fn last_on_or_before(&self, date: NaiveDate) -> Option<usize> {
        self.dates.partition_point(|d| *d <= date).checked_sub(1)
    }

    /// Sub-panel covering `[start, end]` inclusive.
    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> Result<PricePanel> {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        if lo >= hi {
            return Err(Error::Insufficient(format!(
                "no trading dates between {start} and {end}"
            )));
        }
        let n = self.tickers.len();
        let data = self.closes.as_slice()[lo * n..hi * n].to_vec();
        Ok(PricePanel {
            tickers: self.tickers.clone(),
            dates: self.dates[lo..hi].to_vec(),
            closes: Matrix::from_vec(hi - lo, n, data)?,
        })
    }
}

pub fn build_panel(series: &[OhlcvSeries], policy: AlignPolicy) -> Result<PricePanel> {
    build_panel_field(series, policy, PriceField::Close)
}

pub fn build_panel_field(
    series: &[OhlcvSeries],
    policy: AlignPolicy,
    field: PriceField,
) -> Result<PricePanel> {
    if series.is_empty() {
        return Err(Error::Insufficient("no series to align".into()));
    }
    let mut seen = HashSet::new();
    for s in series {
        if !seen.insert(s.ticker.as_str()) {
            return Err(Error::DuplicateTicker(s.ticker.clone()));
        }
    }

    let dates: Vec<NaiveDate> = match policy {
        AlignPolicy::Intersect => {
            let mut common: BTreeSet<NaiveDate> = series[0].rows.iter().map(|r| r.date).collect();
            for s in &series[1..] {
                let other: HashSet<NaiveDate> = s.rows.iter().map(|r| r.date).collect();
                common.retain(|d| other.contains(d));
            }
            common.into_iter().collect()
        }
        AlignPolicy::ForwardFill => {
            let start = series
                .iter()
                .filter_map(|s| s.rows.first().map(|r| r.date))
                .max();
            let union: BTreeSet<NaiveDate> = series
                .iter()
                .flat_map(|s| s.rows.iter().map(|r| r.date))
                .collect();
            match start {
                Some(start) if series.iter().all(|s| !s.rows.is_empty()) => {
                    union.into_iter().filter(|d| *d >= start).collect()
                }
                _ => Vec::new(),
            }
        }
    };
    if dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }

    let n = series.len();
    let mut closes = Matrix::zeros(dates.len(), n);
    for (c, s) in series.iter().enumerate() {
        // Both sequences are sorted, so a single merge pass fills the column.
        let mut j = 0;
        let mut last = None;
        for (r, d) in dates.iter().enumerate() {
            while j < s.rows.len() && s.rows[j].date <= *d {
                last = Some(s.rows[j].field(field));
                j += 1;
            }
            closes[(r, c)] = last.ok_or(Error::EmptyIntersection)?;
        }
    }
    PricePanel::new(
        series.iter().map(|s| s.ticker.clone()).collect(),
        dates,
        closes,
    )
}

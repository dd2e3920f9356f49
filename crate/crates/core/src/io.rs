//! Text formats: option chains, dated price or return series, run configuration.
//!
//! Chain files carry their own spot and rate:
//!
//! ```text
//! # spot=100
//! # rate=0.03
//! strike,days_to_maturity,market_price
//! 95,20,6.41
//! ```
//!
//! Return files are `date,value` rows with ISO dates; config files are
//! `key=value` lines. Every malformed line is reported with its number.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::calibration::{OptionQuote, TRADING_DAY};
use crate::error::{Error, Result};
use crate::optimize::MinimizeConfig;

/// Longest maturity kept when the short-dated filter is on, in trading days.
pub const MAX_FILTERED_DAYS: u32 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainFile {
    pub spot: f64,
    pub rate: f64,
    pub quotes: Vec<OptionQuote>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn load_chain(path: impl AsRef<Path>, maturity_filter: bool) -> Result<ChainFile> {
    let path = path.as_ref();
    parse_chain(&read(path)?, path, maturity_filter)
}

/// Parses chain text; `path` is only used in diagnostics.
pub fn parse_chain(text: &str, path: &Path, maturity_filter: bool) -> Result<ChainFile> {
    let mut spot = None;
    let mut rate = None;
    let mut columns: Option<[usize; 3]> = None;
    let mut width = 0;
    let mut quotes = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let slot = match key.trim() {
                    "spot" => &mut spot,
                    "rate" => &mut rate,
                    _ => continue,
                };
                let v: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| parse_error(path, lineno, format!("{} is not a number: '{}'", key.trim(), value.trim())))?;
                if !v.is_finite() {
                    return Err(parse_error(path, lineno, format!("{} must be finite", key.trim())));
                }
                *slot = Some(v);
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(cols) = columns else {
            let find = |name: &str| {
                fields
                    .iter()
                    .position(|f| *f == name)
                    .ok_or_else(|| parse_error(path, lineno, format!("missing column '{name}'")))
            };
            columns = Some([find("strike")?, find("days_to_maturity")?, find("market_price")?]);
            width = fields.len();
            continue;
        };
        if fields.len() != width {
            return Err(parse_error(
                path,
                lineno,
                format!("expected {width} fields, got {}", fields.len()),
            ));
        }
        let num = |col: usize, name: &str| -> Result<f64> {
            fields[col]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(path, lineno, format!("{name} is not a number: '{}'", fields[col])))
        };
        let strike = num(cols[0], "strike")?;
        let days: u32 = fields[cols[1]].parse().map_err(|_| {
            parse_error(
                path,
                lineno,
                format!("days_to_maturity must be a positive integer: '{}'", fields[cols[1]]),
            )
        })?;
        let price = num(cols[2], "market_price")?;
        let quote = OptionQuote::new(strike, days, price).map_err(|e| parse_error(path, lineno, e.to_string()))?;
        if maturity_filter && days > MAX_FILTERED_DAYS {
            continue;
        }
        quotes.push(quote);
    }

    let eof = last_line.max(1);
    let spot = spot.ok_or_else(|| parse_error(path, eof, "missing '# spot=' line"))?;
    let rate = rate.ok_or_else(|| parse_error(path, eof, "missing '# rate=' line"))?;
    if !(spot > 0.0) {
        return Err(parse_error(path, eof, format!("spot must be positive, got {spot}")));
    }
    if columns.is_none() {
        return Err(parse_error(path, eof, "missing header 'strike,days_to_maturity,market_price'"));
    }
    if quotes.is_empty() {
        return Err(parse_error(path, eof, "no quotes"));
    }
    Ok(ChainFile { spot, rate, quotes })
}

/// Canonical chain text; [`parse_chain`] reads it back exactly.
pub fn format_chain(chain: &ChainFile) -> String {
    let mut out = format!(
        "# spot={}\n# rate={}\nstrike,days_to_maturity,market_price\n",
        chain.spot, chain.rate
    );
    for q in &chain.quotes {
        let _ = writeln!(out, "{},{},{}", q.strike, q.days_to_maturity, q.market_price);
    }
    out
}

pub fn write_chain(path: impl AsRef<Path>, chain: &ChainFile) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_chain(chain)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Price,
    Return,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub rows: Vec<(NaiveDate, f64)>,
    pub value_kind: ValueKind,
}

impl ReturnSeries {
    /// Simple returns dated at the end of each period. A price series of
    /// length `m` gives `m - 1` returns.
    pub fn returns(&self) -> Vec<(NaiveDate, f64)> {
        match self.value_kind {
            ValueKind::Return => self.rows.clone(),
            ValueKind::Price => self
                .rows
                .windows(2)
                .map(|w| (w[1].0, w[1].1 / w[0].1 - 1.0))
                .collect(),
        }
    }
}

pub fn load_returns(path: impl AsRef<Path>, value_kind: ValueKind) -> Result<ReturnSeries> {
    let path = path.as_ref();
    parse_returns(&read(path)?, path, value_kind)
}

pub fn parse_returns(text: &str, path: &Path, value_kind: ValueKind) -> Result<ReturnSeries> {
    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if rows.is_empty() && fields.first() == Some(&"date") {
            continue;
        }
        if fields.len() != 2 {
            return Err(parse_error(path, lineno, format!("expected 'date,value', got {} fields", fields.len())));
        }
        let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
            .map_err(|_| parse_error(path, lineno, format!("not an ISO date: '{}'", fields[0])))?;
        let value: f64 = fields[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_error(path, lineno, format!("value is not a number: '{}'", fields[1])))?;
        if value_kind == ValueKind::Price && !(value > 0.0) {
            return Err(parse_error(path, lineno, format!("price must be positive, got {value}")));
        }
        if let Some((prev, _)) = rows.last() {
            if date == *prev {
                return Err(parse_error(path, lineno, format!("duplicate date {date}")));
            }
            if date < *prev {
                return Err(parse_error(path, lineno, format!("date {date} is before {prev}")));
            }
        }
        rows.push((date, value));
    }
    Ok(ReturnSeries { rows, value_kind })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    pub optimizer: MinimizeConfig,
    pub maturity_filter: bool,
    pub ci_level: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: TRADING_DAY,
            optimizer: MinimizeConfig::default(),
            maturity_filter: false,
            ci_level: 0.95,
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    parse_config(&read(path)?, path)
}

pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_error(path, lineno, format!("expected key=value, got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| parse_error(path, lineno, format!("{key}: expected {what}, got '{value}'"));
        let positive = || -> Result<f64> {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .ok_or_else(|| bad("a positive number"))
        };
        match key {
            "dt" => cfg.dt = positive()?,
            "optimizer_tolerance" => cfg.optimizer.ftol = positive()?,
            "optimizer_max_evaluations" => {
                cfg.optimizer.max_evaluations = value
                    .parse()
                    .ok()
                    .filter(|v| *v > 0)
                    .ok_or_else(|| bad("a positive integer"))?
            }
            "optimizer_restarts" => {
                cfg.optimizer.restarts = value.parse().map_err(|_| bad("a non-negative integer"))?
            }
            "seed" => cfg.optimizer.seed = value.parse().map_err(|_| bad("a non-negative integer"))?,
            "maturity_filter" => {
                cfg.maturity_filter = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    _ => return Err(bad("true or false")),
                }
            }
            "ci_level" => {
                cfg.ci_level = value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| *v > 0.0 && *v < 1.0)
                    .ok_or_else(|| bad("a level in (0, 1)"))?
            }
            _ => return Err(parse_error(path, lineno, format!("unknown key '{key}'"))),
        }
    }
    Ok(cfg)
}

/// Path used in diagnostics for text that did not come from a file.
pub fn inline_path() -> PathBuf {
    PathBuf::from("<input>")
}

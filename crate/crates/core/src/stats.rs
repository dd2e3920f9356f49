//! Inference on the physical up probability from daily returns.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};
use crate::special::{chi_square_sf, ln_binomial, norm_inv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpDownCounts {
    pub ups: u64,
    pub total: u64,
}

impl UpDownCounts {
    pub fn new(ups: u64, total: u64) -> Result<Self> {
        if total == 0 {
            return Err(Error::domain("no observations"));
        }
        if ups > total {
            return Err(Error::domain(format!("{ups} ups out of {total} observations")));
        }
        Ok(Self { ups, total })
    }

    pub fn p_hat(&self) -> f64 {
        self.ups as f64 / self.total as f64
    }

    pub fn downs(&self) -> u64 {
        self.total - self.ups
    }
}

/// Counts strictly positive returns. A zero return is not an up move.
pub fn up_proportion(returns: &[f64]) -> Result<UpDownCounts> {
    if returns.is_empty() {
        return Err(Error::domain("return series is empty"));
    }
    if let Some(bad) = returns.iter().find(|r| r.is_nan()) {
        return Err(Error::domain(format!("return {bad} is not a number")));
    }
    let ups = returns.iter().filter(|r| **r > 0.0).count() as u64;
    UpDownCounts::new(ups, returns.len() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// Wilson score interval at confidence `level`.
pub fn proportion_ci(counts: UpDownCounts, level: f64) -> Result<Interval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level must be in (0, 1), got {level}")));
    }
    let z = norm_inv(0.5 + 0.5 * level);
    let n = counts.total as f64;
    let p = counts.p_hat();
    let z2n = z * z / n;
    let center = (p + 0.5 * z2n) / (1.0 + z2n);
    let half = z * (p * (1.0 - p) / n + 0.25 * z2n / n).sqrt() / (1.0 + z2n);
    let (mut low, mut high) = (center - half, center + half);
    // exact at the extremes, where roundoff would otherwise leave 1e-17 residue
    if counts.ups == 0 {
        low = 0.0;
    }
    if counts.ups == counts.total {
        high = 1.0;
    }
    Ok(Interval {
        low: low.clamp(0.0, 1.0),
        high: high.clamp(0.0, 1.0),
    })
}

fn binomial_ln_pmf(n: u64, k: u64, p: f64) -> f64 {
    ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
}

/// Two-sided exact binomial test of `p = p0`.
///
/// Sums the probabilities of every outcome no more likely than the observed
/// one, with a relative slack of `1e-7` so ties survive roundoff.
pub fn exact_binomial_test(counts: UpDownCounts, p0: f64) -> Result<f64> {
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::domain(format!("null probability must be in (0, 1), got {p0}")));
    }
    let n = counts.total;
    let observed = binomial_ln_pmf(n, counts.ups, p0);
    let cutoff = observed + (1.0 + 1e-7f64).ln();
    let total: f64 = (0..=n)
        .map(|k| binomial_ln_pmf(n, k, p0))
        .filter(|lp| *lp <= cutoff)
        .map(f64::exp)
        .sum();
    Ok(total.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
}

/// Pearson chi-square test that every group shares one up probability.
/// No continuity correction.
pub fn homogeneity_test(groups: &[UpDownCounts]) -> Result<ChiSquareTest> {
    if groups.len() < 2 {
        return Err(Error::domain(format!("need at least 2 groups, got {}", groups.len())));
    }
    if let Some(g) = groups.iter().find(|g| g.total == 0 || g.ups > g.total) {
        return Err(Error::domain(format!("invalid group {}/{}", g.ups, g.total)));
    }
    let ups: u64 = groups.iter().map(|g| g.ups).sum();
    let total: u64 = groups.iter().map(|g| g.total).sum();
    if ups == 0 || ups == total {
        return Err(Error::Degenerate(format!(
            "pooled proportion {ups}/{total} leaves empty expected counts"
        )));
    }
    let pooled = ups as f64 / total as f64;
    let statistic: f64 = groups
        .iter()
        .map(|g| {
            let up = g.total as f64 * pooled;
            let down = g.total as f64 - up;
            (g.ups as f64 - up).powi(2) / up + (g.downs() as f64 - down).powi(2) / down
        })
        .sum();
    let df = groups.len() as u64 - 1;
    Ok(ChiSquareTest {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearEstimate {
    pub year: i32,
    pub counts: UpDownCounts,
    pub p_hat: f64,
    pub ci: Interval,
}

/// Per-calendar-year counts and Wilson intervals, ordered by year.
pub fn grouped_estimates(dated_returns: &[(NaiveDate, f64)], level: f64) -> Result<Vec<YearEstimate>> {
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (date, r) in dated_returns {
        by_year.entry(date.year()).or_default().push(*r);
    }
    by_year
        .into_iter()
        .map(|(year, returns)| {
            let counts = up_proportion(&returns)?;
            Ok(YearEstimate {
                year,
                counts,
                p_hat: counts.p_hat(),
                ci: proportion_ci(counts, level)?,
            })
        })
        .collect()
}

const YEARLY_HEADER: &str = "year,ups,total,p_hat,ci_low,ci_high";

pub fn yearly_csv(rows: &[YearEstimate], fmt: impl Fn(f64) -> String) -> String {
    let mut out = String::from(YEARLY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.year,
            r.counts.ups,
            r.counts.total,
            fmt(r.p_hat),
            fmt(r.ci.low),
            fmt(r.ci.high)
        );
    }
    out
}

pub fn parse_yearly_csv(text: &str) -> Result<Vec<YearEstimate>> {
    let bad = |line: usize, message: String| Error::Parse {
        path: "<yearly estimates>".into(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == YEARLY_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(lineno, format!("expected 6 fields, got {}", f.len())));
        }
        let int = |i: usize| -> Result<u64> {
            f[i].parse().map_err(|e| bad(lineno, format!("field {}: {e}", i + 1)))
        };
        let num = |i: usize| -> Result<f64> {
            f[i].parse().map_err(|e| bad(lineno, format!("field {}: {e}", i + 1)))
        };
        let year = f[0].parse().map_err(|e| bad(lineno, format!("year: {e}")))?;
        let counts = UpDownCounts::new(int(1)?, int(2)?).map_err(|e| bad(lineno, e.to_string()))?;
        rows.push(YearEstimate {
            year,
            counts,
            p_hat: num(3)?,
            ci: Interval {
                low: num(4)?,
                high: num(5)?,
            },
        });
    }
    Ok(rows)
}

//! Least-squares calibration of tree models to a call-option chain.
//!
//! Every quote is priced on a lattice with one step per trading day
//! (`dt = 1/252` by default, `n` = days to maturity). The objective is the
//! sum of squared price differences; the reported fit is its RMSE together
//! with AAE, APE and ARPE.
//!
//! Free parameters per model:
//!
//! | model | free | derived |
//! |---|---|---|
//! | CRR, Jarrow-Rudd, Tian | `sigma` | classical special case |
//! | MP-Bin1 | `sigma, g` | `gamma = delta = r`, `v = 0` |
//! | MP-Bin2 | `gamma, g, p_dt, sigma` | `delta = (r - g gamma)/(1 - g)`, `v = (p_dt - g)/sqrt(dt)` |
//!
//! At a fixed step the classical trees are exact restrictions of MP-Bin1
//! (take `g` equal to their step probability), and MP-Bin1 is the restriction
//! `gamma = r`, `p_dt = g` of MP-Bin2. [`calibrate_all`] seeds each richer
//! search with the poorer optima, so the fitted errors are ordered.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{price_european, Lattice, Payoff};
use crate::model::{crr_params, jarrow_rudd_params, tian_params, FactorForm, ModelParams};
use crate::optimize::{minimize, Bound, MinimizeConfig};

/// One trading day in years.
pub const TRADING_DAY: f64 = 1.0 / 252.0;

/// Lower clamp on probabilities, volatility and the MP-Bin2 up drift.
pub const PARAM_FLOOR: f64 = 1e-4;
pub const SIGMA_CAP: f64 = 5.0;
pub const GAMMA_CAP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub strike: f64,
    pub days_to_maturity: u32,
    pub market_price: f64,
}

impl OptionQuote {
    pub fn new(strike: f64, days_to_maturity: u32, market_price: f64) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::domain(format!("strike must be positive, got {strike}")));
        }
        if days_to_maturity == 0 {
            return Err(Error::domain("days to maturity must be at least 1"));
        }
        if !(market_price > 0.0) || !market_price.is_finite() {
            return Err(Error::domain(format!("market price must be positive, got {market_price}")));
        }
        Ok(Self {
            strike,
            days_to_maturity,
            market_price,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub aae: f64,
    pub ape: f64,
    pub arpe: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeModel {
    Crr,
    JarrowRudd,
    Tian,
    MpBin1,
    MpBin2,
}

impl TreeModel {
    pub const ALL: [TreeModel; 5] = [
        TreeModel::Crr,
        TreeModel::JarrowRudd,
        TreeModel::Tian,
        TreeModel::MpBin1,
        TreeModel::MpBin2,
    ];

    pub fn is_classical(self) -> bool {
        matches!(self, TreeModel::Crr | TreeModel::JarrowRudd | TreeModel::Tian)
    }

    pub fn dimension(self) -> usize {
        match self {
            TreeModel::MpBin1 => 2,
            TreeModel::MpBin2 => 4,
            _ => 1,
        }
    }

    fn bounds(self) -> Vec<Bound> {
        let sigma = Bound::log(PARAM_FLOOR, SIGMA_CAP);
        let prob = Bound::linear(PARAM_FLOOR, 1.0 - PARAM_FLOOR);
        match self {
            TreeModel::Crr | TreeModel::JarrowRudd | TreeModel::Tian => vec![sigma],
            TreeModel::MpBin1 => vec![sigma, prob],
            TreeModel::MpBin2 => vec![Bound::linear(PARAM_FLOOR, GAMMA_CAP), prob, prob, sigma],
        }
    }

    /// Tree parameters for a free-parameter vector.
    pub fn params(self, x: &[f64], r: f64, dt: f64) -> ModelParams {
        match self {
            TreeModel::Crr => crr_params(r, x[0]),
            TreeModel::JarrowRudd => jarrow_rudd_params(r, x[0]),
            TreeModel::Tian => tian_params(r, x[0]),
            TreeModel::MpBin1 => ModelParams::new(r, r, x[1], 0.0, x[0]),
            TreeModel::MpBin2 => {
                let (gamma, g, p, sigma) = (x[0], x[1], x[2], x[3]);
                // (r - g gamma)/(1 - g), written so that gamma == r gives delta == r exactly
                let delta = r + g * (r - gamma) / (1.0 - g);
                ModelParams::new(gamma, delta, g, (p - g) / dt.sqrt(), sigma)
            }
        }
    }

    /// Free-parameter vector that reproduces `params` at step `dt`, as far as
    /// the model's structure allows.
    pub fn embed(self, params: &ModelParams, dt: f64) -> Vec<f64> {
        match self {
            TreeModel::Crr | TreeModel::JarrowRudd | TreeModel::Tian => vec![params.sigma],
            TreeModel::MpBin1 => vec![params.sigma, params.p_up(dt)],
            TreeModel::MpBin2 => vec![params.gamma, params.g, params.p_up(dt), params.sigma],
        }
    }
}

impl fmt::Display for TreeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeModel::Crr => "CRR",
            TreeModel::JarrowRudd => "JR",
            TreeModel::Tian => "Tian",
            TreeModel::MpBin1 => "MPBin1",
            TreeModel::MpBin2 => "MPBin2",
        })
    }
}

impl FromStr for TreeModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "crr" => Ok(TreeModel::Crr),
            "jr" | "jarrowrudd" => Ok(TreeModel::JarrowRudd),
            "tian" => Ok(TreeModel::Tian),
            "mpbin1" => Ok(TreeModel::MpBin1),
            "mpbin2" => Ok(TreeModel::MpBin2),
            _ => Err(Error::domain(format!("unknown model '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub model: TreeModel,
    pub params: ModelParams,
    pub metrics: ErrorMetrics,
    pub objective_evaluations: usize,
    pub converged: bool,
}

impl CalibrationResult {
    /// Physical up probability of the fitted tree at step `dt`.
    pub fn p_dt(&self, dt: f64) -> f64 {
        self.params.p_up(dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub dt: f64,
    pub optimizer: MinimizeConfig,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            dt: TRADING_DAY,
            optimizer: MinimizeConfig::default(),
        }
    }
}

fn sum_squares(model: &[f64], market: &[f64]) -> f64 {
    model.iter().zip(market).map(|(a, b)| (b - a).powi(2)).sum()
}

/// AAE, APE, ARPE and RMSE of model prices against market prices.
pub fn error_metrics(model_prices: &[f64], market_prices: &[f64]) -> Result<ErrorMetrics> {
    if model_prices.len() != market_prices.len() {
        return Err(Error::domain(format!(
            "{} model prices for {} market prices",
            model_prices.len(),
            market_prices.len()
        )));
    }
    if market_prices.is_empty() {
        return Err(Error::domain("no prices to compare"));
    }
    if let Some(bad) = market_prices.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::domain(format!("market price must be positive, got {bad}")));
    }
    let n = market_prices.len() as f64;
    let abs_sum: f64 = model_prices
        .iter()
        .zip(market_prices)
        .map(|(m, p)| (p - m).abs())
        .sum();
    let rel_sum: f64 = model_prices
        .iter()
        .zip(market_prices)
        .map(|(m, p)| (p - m).abs() / p)
        .sum();
    let aae = abs_sum / n;
    let mean_price = market_prices.iter().sum::<f64>() / n;
    Ok(ErrorMetrics {
        aae,
        ape: aae / mean_price,
        arpe: rel_sum / n,
        rmse: (sum_squares(model_prices, market_prices) / n).sqrt(),
    })
}

/// Call prices for each quote on a lattice with one step per day.
pub fn model_prices(
    params: &ModelParams,
    quotes: &[OptionQuote],
    s0: f64,
    r: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if quotes.is_empty() {
        return Err(Error::domain("option chain is empty"));
    }
    quotes
        .iter()
        .enumerate()
        .map(|(index, q)| {
            let lattice = Lattice::new(s0, params, q.days_to_maturity as usize, dt, r, FactorForm::Exact)
                .and_then(|l| price_european(&l, params, &Payoff::call(q.strike)));
            lattice.map_err(|e| Error::Quote {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

struct Problem<'a> {
    model: TreeModel,
    quotes: &'a [OptionQuote],
    market: Vec<f64>,
    s0: f64,
    r: f64,
    dt: f64,
}

impl Problem<'_> {
    fn objective(&self, x: &[f64]) -> f64 {
        let params = self.model.params(x, self.r, self.dt);
        match model_prices(&params, self.quotes, self.s0, self.r, self.dt) {
            Ok(prices) => sum_squares(&prices, &self.market),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Volatility at which the CRR tree reprices the quote nearest the money.
pub fn at_the_money_sigma(quotes: &[OptionQuote], s0: f64, r: f64, dt: f64) -> Result<f64> {
    let atm = quotes
        .iter()
        .min_by(|a, b| {
            (a.strike - s0)
                .abs()
                .total_cmp(&(b.strike - s0).abs())
                .then(a.days_to_maturity.cmp(&b.days_to_maturity))
        })
        .ok_or_else(|| Error::domain("option chain is empty"))?;
    let single = [*atm];
    // infeasible low volatilities count as too cheap
    let excess = |sigma: f64| match model_prices(&crr_params(r, sigma), &single, s0, r, dt) {
        Ok(p) => p[0] - atm.market_price,
        Err(_) => f64::NEG_INFINITY,
    };
    let (mut lo, mut hi) = (PARAM_FLOOR, SIGMA_CAP);
    if excess(hi) <= 0.0 {
        return Ok(hi);
    }
    if excess(lo) >= 0.0 {
        return Ok(lo);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn default_start(model: TreeModel, sigma: f64, r: f64) -> Vec<f64> {
    match model {
        TreeModel::Crr | TreeModel::JarrowRudd | TreeModel::Tian => vec![sigma],
        TreeModel::MpBin1 => vec![sigma, 0.5],
        TreeModel::MpBin2 => vec![r.clamp(PARAM_FLOOR, GAMMA_CAP), 0.5, 0.5, sigma],
    }
}

/// Calibrates `model` from the neutral start (at-the-money volatility,
/// `g = p_dt = 1/2`, `gamma = r`).
pub fn calibrate(
    model: TreeModel,
    quotes: &[OptionQuote],
    s0: f64,
    r: f64,
    config: &CalibrationConfig,
) -> Result<CalibrationResult> {
    calibrate_seeded(model, quotes, s0, r, config, &[])
}

/// Calibrates `model`, starting from whichever of the neutral start and the
/// embedded `seeds` has the lowest objective.
pub fn calibrate_seeded(
    model: TreeModel,
    quotes: &[OptionQuote],
    s0: f64,
    r: f64,
    config: &CalibrationConfig,
    seeds: &[ModelParams],
) -> Result<CalibrationResult> {
    if quotes.is_empty() {
        return Err(Error::domain("option chain is empty"));
    }
    if !(s0 > 0.0) {
        return Err(Error::domain(format!("spot must be positive, got {s0}")));
    }
    let dt = config.dt;
    let problem = Problem {
        model,
        quotes,
        market: quotes.iter().map(|q| q.market_price).collect(),
        s0,
        r,
        dt,
    };
    let bounds = model.bounds();
    let sigma0 = at_the_money_sigma(quotes, s0, r, dt)?;
    let neutral = default_start(model, sigma0, r);
    if neutral.iter().zip(&bounds).any(|(x, b)| !b.contains(*x)) {
        return Err(Error::InfeasibleStart(format!("{neutral:?} outside {bounds:?}")));
    }

    let mut evaluations = 0;
    let mut start = neutral;
    let mut start_value = problem.objective(&start);
    evaluations += 1;
    for seed in seeds {
        let x = model.embed(seed, dt);
        if x.iter().zip(&bounds).any(|(x, b)| !b.contains(*x)) {
            continue;
        }
        let value = problem.objective(&x);
        evaluations += 1;
        if value < start_value {
            start = x;
            start_value = value;
        }
    }
    if !start_value.is_finite() {
        return Err(Error::InfeasibleStart(format!(
            "{model} cannot price the chain at {start:?}"
        )));
    }

    let found = minimize(|x| problem.objective(x), &bounds, &start, &config.optimizer)?;
    let params = model.params(&found.argmin, r, dt);
    let prices = model_prices(&params, quotes, s0, r, dt)?;
    Ok(CalibrationResult {
        model,
        params,
        metrics: error_metrics(&prices, &problem.market)?,
        objective_evaluations: evaluations + found.evaluations,
        converged: found.converged,
    })
}

/// Calibrates every model in [`TreeModel::ALL`] order, seeding MP-Bin1 with
/// the classical optima and MP-Bin2 with all earlier optima.
pub fn calibrate_all(
    quotes: &[OptionQuote],
    s0: f64,
    r: f64,
    config: &CalibrationConfig,
) -> Result<Vec<CalibrationResult>> {
    calibrate_models(&TreeModel::ALL, quotes, s0, r, config)
}

/// Calibrates the requested models; each non-classical model is seeded with
/// the optima of the models before it in the list.
pub fn calibrate_models(
    models: &[TreeModel],
    quotes: &[OptionQuote],
    s0: f64,
    r: f64,
    config: &CalibrationConfig,
) -> Result<Vec<CalibrationResult>> {
    let mut done: Vec<CalibrationResult> = Vec::with_capacity(models.len());
    for &model in models {
        let seeds: Vec<ModelParams> = if model.is_classical() {
            Vec::new()
        } else {
            done.iter().map(|c| c.params).collect()
        };
        done.push(calibrate_seeded(model, quotes, s0, r, config, &seeds)?);
    }
    Ok(done)
}

const REPORT_HEADER: &str =
    "model,sigma,p_dt,gamma,delta,g,v,aae,ape,arpe,rmse,evaluations,converged";

/// One row per model: fitted parameters, step probability and the four errors.
pub fn report_csv(results: &[CalibrationResult], dt: f64, fmt: impl Fn(f64) -> String) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for c in results {
        let p = &c.params;
        let m = &c.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.model,
            fmt(p.sigma),
            fmt(c.p_dt(dt)),
            fmt(p.gamma),
            fmt(p.delta),
            fmt(p.g),
            fmt(p.v),
            fmt(m.aae),
            fmt(m.ape),
            fmt(m.arpe),
            fmt(m.rmse),
            c.objective_evaluations,
            c.converged
        );
    }
    out
}

/// Parses [`report_csv`] output back into results.
pub fn parse_report_csv(text: &str) -> Result<Vec<CalibrationResult>> {
    let bad = |line: usize, message: String| Error::Parse {
        path: "<calibration report>".into(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == REPORT_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(bad(lineno, format!("expected 13 fields, got {}", f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse::<f64>()
                .map_err(|e| bad(lineno, format!("field {}: {e}", i + 1)))
        };
        let model: TreeModel = f[0].parse().map_err(|e: Error| bad(lineno, e.to_string()))?;
        out.push(CalibrationResult {
            model,
            params: ModelParams::new(num(3)?, num(4)?, num(5)?, num(6)?, num(1)?),
            metrics: ErrorMetrics {
                aae: num(7)?,
                ape: num(8)?,
                arpe: num(9)?,
                rmse: num(10)?,
            },
            objective_evaluations: f[11]
                .parse()
                .map_err(|e| bad(lineno, format!("evaluations: {e}")))?,
            converged: f[12]
                .parse()
                .map_err(|e| bad(lineno, format!("converged: {e}")))?,
        });
    }
    Ok(out)
}

//! Command-line front end. Output is CSV on stdout with `#` metadata lines.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::calibration::{calibrate_models, report_csv, CalibrationConfig, TreeModel};
use crate::convergence::{rate_constant, rate_experiment};
use crate::error::{Error, Result};
use crate::io::{load_chain, load_config, load_returns, RunConfig, ValueKind};
use crate::lattice::{discontinuity_report, price_european, Lattice, Payoff};
use crate::model::{
    crr_params, gbm_moment, jarrow_rudd_params, step_moment, tian_params, FactorForm, ModelParams,
};
use crate::stats::{
    exact_binomial_test, grouped_estimates, homogeneity_test, proportion_ci, up_proportion,
    yearly_csv,
};

#[derive(Debug, Parser)]
#[command(name = "mpbin", version, about = "Multi-purpose binomial tree toolkit")]
struct Cli {
    /// key=value run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print shortest round-trip decimals instead of 6 significant digits
    #[arg(long, global = true)]
    full_precision: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Price a European option on a tree
    Price(PriceArgs),
    /// Fit tree models to an option chain
    Calibrate(CalibrateArgs),
    /// Kolmogorov distance to the lognormal limit over a sweep of n
    Converge(ConvergeArgs),
    /// Estimate the physical up probability from dated returns or prices
    EstimateP(EstimateArgs),
    /// One-step option value as the physical probability moves to 0 or 1
    DemoDiscontinuity(DiscontinuityArgs),
    /// Compare one-step tree moments with the geometric Brownian motion ones
    Moments(MomentsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PriceModel {
    Crr,
    Jr,
    Tian,
    Mp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PayoffKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Form {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Price,
    Return,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Grouping {
    Year,
    None,
}

/// Tree parameters; unset drifts default to the rate where one is given.
#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct MpArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    g: f64,
    #[arg(long, default_value_t = 0.0)]
    v: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct PriceArgs {
    #[arg(long, value_enum, default_value = "crr")]
    model: PriceModel,
    #[arg(long)]
    s0: f64,
    #[arg(long, visible_alias = "K")]
    strike: f64,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long = "T")]
    maturity: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "call")]
    payoff: PayoffKind,
    #[arg(long, value_enum, default_value = "exact")]
    form: Form,
    #[command(flatten)]
    mp: MpArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct CalibrateArgs {
    #[arg(long)]
    chain: PathBuf,
    /// Comma-separated subset of crr,jr,tian,mpbin1,mpbin2
    #[arg(long, value_delimiter = ',', default_value = "crr,jr,tian,mpbin1,mpbin2")]
    models: Vec<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct ConvergeArgs {
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    g: f64,
    #[arg(long, default_value_t = 0.0)]
    v: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    maturity: f64,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256,512,1024,2048")]
    n: Vec<usize>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct EstimateArgs {
    #[arg(long)]
    returns: PathBuf,
    #[arg(long, value_enum, default_value = "return")]
    kind: Kind,
    #[arg(long, value_enum, default_value = "year")]
    grouping: Grouping,
    #[arg(long, default_value_t = 0.5)]
    p0: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct DiscontinuityArgs {
    #[arg(long, default_value_t = 100.0)]
    s0: f64,
    #[arg(long, visible_alias = "K", default_value_t = 100.0)]
    strike: f64,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    maturity: f64,
    #[arg(long, value_enum, default_value = "call")]
    payoff: PayoffKind,
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.5,0.99,1")]
    p_grid: Vec<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct MomentsArgs {
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    g: f64,
    #[arg(long, default_value_t = 0.0)]
    v: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 8)]
    j_max: u32,
    /// Largest step; defaults to the configured dt
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 5)]
    halvings: u32,
}

/// Largest change of `error / dt^2` allowed between successive halvings.
pub const MOMENT_RATIO_LIMIT: f64 = 4.0;

/// Formats numbers for output: 6 significant digits, or the shortest
/// decimal that reads back exactly.
#[derive(Debug, Clone, Copy)]
pub struct NumberFormat {
    pub full_precision: bool,
}

impl NumberFormat {
    pub fn format(&self, x: f64) -> String {
        if self.full_precision {
            format!("{x}")
        } else {
            significant(x, 6)
        }
    }
}

/// `%g`-style rendering with `digits` significant digits.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a new leading digit, as in 9.999995 -> 10.00000
        let s = if s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > digits
            && decimals > 0
        {
            let d = decimals - 1;
            format!("{x:.d$}")
        } else {
            s
        };
        trim(s)
    } else {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{}", trim(mantissa.to_string()), e)
    }
}

/// Runs one invocation. Returns 0 on success, 2 on a usage error and 1 on a
/// data or domain error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            if out.write_all(text.as_bytes()).is_err() {
                return 1;
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<String> {
    let config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let fmt = NumberFormat {
        full_precision: cli.full_precision,
    };
    match &cli.command {
        Command::Price(a) => price(a, fmt),
        Command::Calibrate(a) => calibrate_cmd(a, &config, fmt),
        Command::Converge(a) => converge(a, fmt),
        Command::EstimateP(a) => estimate_p(a, &config, fmt),
        Command::DemoDiscontinuity(a) => demo_discontinuity(a, fmt),
        Command::Moments(a) => moments(a, &config, fmt),
    }
}

fn payoff(kind: PayoffKind, strike: f64) -> Payoff {
    match kind {
        PayoffKind::Call => Payoff::call(strike),
        PayoffKind::Put => Payoff::put(strike),
    }
}

fn price(a: &PriceArgs, fmt: NumberFormat) -> Result<String> {
    let params = match a.model {
        PriceModel::Crr => crr_params(a.r, a.sigma),
        PriceModel::Jr => jarrow_rudd_params(a.r, a.sigma),
        PriceModel::Tian => tian_params(a.r, a.sigma),
        PriceModel::Mp => ModelParams::new(
            a.mp.gamma.unwrap_or(a.r),
            a.mp.delta.unwrap_or(a.r),
            a.mp.g,
            a.mp.v,
            a.sigma,
        ),
    };
    let form = match a.form {
        Form::Exact => FactorForm::Exact,
        Form::Asymptotic => FactorForm::Asymptotic,
    };
    let lattice = Lattice::with_maturity(a.s0, &params, a.n, a.maturity, a.r, form)?;
    let value = price_european(&lattice, &params, &payoff(a.payoff, a.strike))?;
    let f = |x| fmt.format(x);
    Ok(format!(
        "# gamma={} delta={} g={} v={} sigma={}\nmodel,n,price\n{},{},{}\n",
        f(params.gamma),
        f(params.delta),
        f(params.g),
        f(params.v),
        f(params.sigma),
        format!("{:?}", a.model).to_lowercase(),
        a.n,
        f(value)
    ))
}

fn calibrate_cmd(a: &CalibrateArgs, config: &RunConfig, fmt: NumberFormat) -> Result<String> {
    let mut models = a
        .models
        .iter()
        .map(|m| m.parse::<TreeModel>())
        .collect::<Result<Vec<_>>>()?;
    // seeding runs poorer models first
    models.sort_by_key(|m| TreeModel::ALL.iter().position(|x| x == m));
    models.dedup();
    let chain = load_chain(&a.chain, config.maturity_filter)?;
    let cal = CalibrationConfig {
        dt: config.dt,
        optimizer: config.optimizer.clone(),
    };
    let results = calibrate_models(&models, &chain.quotes, chain.spot, chain.rate, &cal)?;
    Ok(format!(
        "# spot={}\n# rate={}\n# quotes={}\n# dt={}\n{}",
        fmt.format(chain.spot),
        fmt.format(chain.rate),
        chain.quotes.len(),
        fmt.format(config.dt),
        report_csv(&results, config.dt, |x| fmt.format(x))
    ))
}

fn converge(a: &ConvergeArgs, fmt: NumberFormat) -> Result<String> {
    let params = ModelParams::new(a.gamma, a.delta, a.g, a.v, a.sigma);
    let exp = rate_experiment(&params, a.maturity, &a.n)?;
    let mut out = format!(
        "# b={} sigma={} T={}\n",
        fmt.format(params.drift()),
        fmt.format(a.sigma),
        fmt.format(a.maturity)
    );
    if a.v == 0.0 {
        out.push_str(&format!("# rate_constant={}\n", fmt.format(rate_constant(a.g)?)));
    }
    out.push_str(&exp.to_csv(|x| fmt.format(x)));
    Ok(out)
}

fn estimate_p(a: &EstimateArgs, config: &RunConfig, fmt: NumberFormat) -> Result<String> {
    let kind = match a.kind {
        Kind::Price => ValueKind::Price,
        Kind::Return => ValueKind::Return,
    };
    let dated = load_returns(&a.returns, kind)?.returns();
    let values: Vec<f64> = dated.iter().map(|r| r.1).collect();
    let counts = up_proportion(&values)?;
    let ci = proportion_ci(counts, config.ci_level)?;
    let p_value = exact_binomial_test(counts, a.p0)?;
    let f = |x| fmt.format(x);
    let mut out = format!(
        "# ups={}\n# total={}\n# p_hat={}\n# ci_level={}\n# ci_low={}\n# ci_high={}\n# exact_test_p0={}\n# exact_test_p_value={}\n",
        counts.ups,
        counts.total,
        f(counts.p_hat()),
        f(config.ci_level),
        f(ci.low),
        f(ci.high),
        f(a.p0),
        f(p_value)
    );
    if let Grouping::Year = a.grouping {
        let years = grouped_estimates(&dated, config.ci_level)?;
        if years.len() >= 2 {
            let groups: Vec<_> = years.iter().map(|y| y.counts).collect();
            match homogeneity_test(&groups) {
                Ok(t) => out.push_str(&format!(
                    "# homogeneity_statistic={}\n# homogeneity_df={}\n# homogeneity_p_value={}\n",
                    f(t.statistic),
                    t.df,
                    f(t.p_value)
                )),
                Err(e) => out.push_str(&format!("# homogeneity_test=unavailable ({e})\n")),
            }
        }
        out.push_str(&yearly_csv(&years, f));
    }
    Ok(out)
}

fn demo_discontinuity(a: &DiscontinuityArgs, fmt: NumberFormat) -> Result<String> {
    let pay = payoff(a.payoff, a.strike);
    let base = discontinuity_report(a.s0, a.r, a.sigma, a.maturity, &pay, 0.5)?;
    let f = |x| fmt.format(x);
    let mut out = format!(
        "# f0_interior={}\n# gap_at_0={}\n# gap_at_1={}\np,f0\n",
        f(base.f0_interior),
        f(base.gap_at_0),
        f(base.gap_at_1)
    );
    for &p in &a.p_grid {
        let rep = discontinuity_report(a.s0, a.r, a.sigma, a.maturity, &pay, p)?;
        out.push_str(&format!("{},{}\n", f(p), f(rep.f0_at_p)));
    }
    Ok(out)
}

fn moments(a: &MomentsArgs, config: &RunConfig, fmt: NumberFormat) -> Result<String> {
    let params = ModelParams::new(a.gamma, a.delta, a.g, a.v, a.sigma);
    let dt0 = a.dt.unwrap_or(config.dt);
    if a.j_max == 0 {
        return Err(Error::domain("j-max must be at least 1"));
    }
    let f = |x| fmt.format(x);
    let mut table = String::from("j,dt,step_moment,gbm_moment,abs_error,error_over_dt2\n");
    let mut summary = String::new();
    for j in 1..=a.j_max {
        let mut scaled = Vec::new();
        for h in 0..=a.halvings {
            let dt = dt0 / 2f64.powi(h as i32);
            let tree = step_moment(&params, dt, j)?;
            let gbm = gbm_moment(params.drift(), params.sigma, dt, j)?;
            let e = (tree - gbm).abs();
            scaled.push(e / (dt * dt));
            table.push_str(&format!("{j},{},{},{},{},{}\n", f(dt), f(tree), f(gbm), f(e), f(e / (dt * dt))));
        }
        let worst = worst_halving_ratio(&scaled);
        let status = if worst <= MOMENT_RATIO_LIMIT { "PASS" } else { "FAIL" };
        summary.push_str(&format!("# j={j} max_halving_ratio={} {status}\n", f(worst)));
    }
    Ok(format!("{table}{summary}"))
}

/// Largest factor by which a sequence changes between neighbours, in either
/// direction. Two zeros count as no change.
pub fn worst_halving_ratio(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].abs(), w[1].abs());
            if a == b {
                1.0
            } else if a == 0.0 || b == 0.0 {
                f64::INFINITY
            } else {
                (a / b).max(b / a)
            }
        })
        .fold(1.0, f64::max)
}

//! Terminal distribution of the tree and its Kolmogorov distance to the
//! lognormal law of geometric Brownian motion.
//!
//! The distance decays like `C / sqrt(n) * (1 - 2p + 2p^2) / sqrt(p(1-p))`;
//! [`rate_experiment`] measures the decay over an `n` sweep.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::risk_neutral_prob;
use crate::model::{step_factors_exact, ModelParams};
use crate::special::{ln_binomial, norm_cdf};

/// Distribution function of a finite discrete law.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCdf {
    support: Vec<f64>,
    cum: Vec<f64>,
}

impl DiscreteCdf {
    /// Builds the CDF from atoms sorted by location.
    pub fn new(support: Vec<f64>, cum: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != cum.len() {
            return Err(Error::domain("support and cumulative masses must be non-empty and aligned"));
        }
        if support.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("support must be strictly ascending"));
        }
        if cum.iter().any(|c| !(0.0..=1.0 + 1e-12).contains(c)) || cum.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("cumulative masses must be non-decreasing within [0, 1]"));
        }
        let last = cum[cum.len() - 1];
        if (last - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("total mass {last} is not 1")));
        }
        Ok(Self { support, cum })
    }

    pub fn from_masses(support: Vec<f64>, masses: &[f64]) -> Result<Self> {
        let cum = masses
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Self::new(support, cum)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cum(&self) -> &[f64] {
        &self.cum
    }

    pub fn masses(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cum
            .iter()
            .map(|&c| {
                let m = c - prev;
                prev = c;
                m
            })
            .collect()
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.support.partition_point(|&s| s <= x) {
            0 => 0.0,
            i => self.cum[i - 1],
        }
    }
}

/// Measure under which the branch probability is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    /// `p = g + v sqrt(dt)`.
    Physical,
    /// Hedge probability at the given risk-free rate.
    RiskNeutral { rate: f64 },
}

/// Law of `S_T` after `n` steps of the exact-factor tree.
pub fn terminal_distribution(
    s0: f64,
    params: &ModelParams,
    n: usize,
    dt: f64,
    measure: Measure,
) -> Result<DiscreteCdf> {
    if n == 0 {
        return Err(Error::domain("terminal distribution needs n >= 1"));
    }
    if !(s0 > 0.0) {
        return Err(Error::domain(format!("spot must be positive, got {s0}")));
    }
    let f = step_factors_exact(params, dt)?;
    let q = match measure {
        Measure::Physical => f.p,
        Measure::RiskNeutral { rate } => risk_neutral_prob(params, rate, dt)?,
    };
    let (ln_u, ln_d, ln_s0) = (f.u.ln(), f.d.ln(), s0.ln());
    let support = (0..=n)
        .map(|i| (ln_s0 + i as f64 * ln_u + (n - i) as f64 * ln_d).exp())
        .collect();

    let (lq, lq1) = (q.ln(), (1.0 - q).ln());
    let log_weight = |i: usize| {
        let up = if i > 0 { i as f64 * lq } else { 0.0 };
        let down = if i < n { (n - i) as f64 * lq1 } else { 0.0 };
        ln_binomial(n as u64, i as u64) + up + down
    };
    let logs: Vec<f64> = (0..=n).map(log_weight).collect();
    // renormalize in log space so that log-gamma rounding cancels out
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = raw.iter().sum();
    let masses: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mut cdf = DiscreteCdf::from_masses(support, &masses)?;
    if let Some(last) = cdf.cum.last_mut() {
        *last = last.min(1.0);
    }
    Ok(cdf)
}

/// CDF of `s0 exp((b - sigma^2/2) t + sigma B(t))` at `x`.
pub fn lognormal_cdf(x: f64, s0: f64, b: f64, sigma: f64, t: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    norm_cdf(((x / s0).ln() - (b - 0.5 * sigma * sigma) * t) / (sigma * t.sqrt()))
}

/// `sup_x |F_n(x) - F(x)|` for a discrete `F_n` and continuous non-decreasing `F`.
///
/// The supremum is attained at a jump, on one side or the other, so both
/// one-sided limits of `F_n` are compared at every atom.
pub fn kolmogorov_distance(empirical: &DiscreteCdf, continuous: impl Fn(f64) -> f64) -> f64 {
    let mut prev = 0.0;
    let mut dist: f64 = 0.0;
    for (&x, &c) in empirical.support.iter().zip(&empirical.cum) {
        let fx = continuous(x);
        dist = dist.max((c - fx).abs()).max((prev - fx).abs());
        prev = c;
    }
    dist
}

/// `(1 - 2p + 2p^2) / sqrt(p(1-p))`, the third absolute moment of a
/// standardized two-point step.
pub fn rate_constant(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0, 1), got {p}")));
    }
    Ok((1.0 - 2.0 * p + 2.0 * p * p) / (p * (1.0 - p)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub distance: f64,
    /// `distance * sqrt(n)`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateExperiment {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `ln distance` against `ln n`.
    pub slope: f64,
}

/// Kolmogorov distance between the `n`-step physical tree over `[0, t]` and
/// the lognormal law with drift `b = g gamma + (1-g) delta`, for each `n`.
pub fn rate_experiment(params: &ModelParams, t: f64, n_values: &[usize]) -> Result<RateExperiment> {
    if n_values.is_empty() {
        return Err(Error::domain("n sweep is empty"));
    }
    if n_values.windows(2).any(|w| w[1] <= w[0]) || n_values[0] == 0 {
        return Err(Error::domain("n sweep must be positive and strictly ascending"));
    }
    if !(t > 0.0) {
        return Err(Error::domain(format!("horizon must be positive, got {t}")));
    }
    let b = params.drift();
    let sigma = params.sigma;
    let rows = n_values
        .iter()
        .map(|&n| {
            let dt = t / n as f64;
            let law = terminal_distribution(1.0, params, n, dt, Measure::Physical)?;
            let distance = kolmogorov_distance(&law, |x| lognormal_cdf(x, 1.0, b, sigma, t));
            Ok(RateRow {
                n,
                distance,
                scaled: distance * (n as f64).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = log_log_slope(&rows);
    Ok(RateExperiment { rows, slope })
}

fn log_log_slope(rows: &[RateRow]) -> f64 {
    if rows.len() < 2 {
        return f64::NAN;
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.n as f64).ln(), r.distance.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

impl RateExperiment {
    /// Header `n,distance,scaled_distance`, one row per `n`, and a
    /// `# slope=` footer.
    pub fn to_csv(&self, fmt: impl Fn(f64) -> String) -> String {
        let mut out = String::from("n,distance,scaled_distance\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{},{}", row.n, fmt(row.distance), fmt(row.scaled));
        }
        let _ = writeln!(out, "# slope={}", fmt(self.slope));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut slope = None;
        let bad = |line: usize, message: String| Error::Parse {
            path: "<rate csv>".into(),
            line,
            message,
        };
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line == "n,distance,scaled_distance" {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# slope=") {
                slope = Some(rest.parse().map_err(|e| bad(lineno, format!("slope: {e}")))?);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(bad(lineno, format!("expected 3 fields, got {}", fields.len())));
            }
            rows.push(RateRow {
                n: fields[0].parse().map_err(|e| bad(lineno, format!("n: {e}")))?,
                distance: fields[1].parse().map_err(|e| bad(lineno, format!("distance: {e}")))?,
                scaled: fields[2].parse().map_err(|e| bad(lineno, format!("scaled: {e}")))?,
            });
        }
        let slope = slope.ok_or_else(|| bad(text.lines().count(), "missing slope footer".into()))?;
        Ok(Self { rows, slope })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn equal_drift(g: f64) -> ModelParams {
        ModelParams::new(0.05, 0.05, g, 0.0, 0.2)
    }

    #[test]
    fn one_step_law() {
        let law = terminal_distribution(100.0, &equal_drift(0.5), 1, 0.01, Measure::Physical).unwrap();
        let f = step_factors_exact(&equal_drift(0.5), 0.01).unwrap();
        assert_relative_eq!(law.support()[0], 100.0 * f.d, max_relative = 1e-14);
        assert_relative_eq!(law.support()[1], 100.0 * f.u, max_relative = 1e-14);
        assert_abs_diff_eq!(law.masses()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_step_law_matches_path_enumeration() {
        let params = equal_drift(0.6);
        let law = terminal_distribution(100.0, &params, 2, 0.01, Measure::Physical).unwrap();
        let f = step_factors_exact(&params, 0.01).unwrap();
        // enumerate the 4 paths and merge recombined nodes by up count
        let mut oracle = [0.0f64; 3];
        for path in 0..4u32 {
            let ups = path.count_ones() as usize;
            oracle[ups] += f.p.powi(ups as i32) * (1.0 - f.p).powi(2 - ups as i32);
        }
        for (m, o) in law.masses().iter().zip(oracle) {
            assert_abs_diff_eq!(*m, o, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(oracle[0], 0.16, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle[1], 0.48, epsilon = 1e-12);
        assert_relative_eq!(law.support()[1], 100.0 * f.u * f.d, max_relative = 1e-14);
    }

    #[test]
    fn large_tree_masses_sum_to_one() {
        for g in [0.1, 0.5, 0.9] {
            let law = terminal_distribution(100.0, &equal_drift(g), 4096, 1.0 / 4096.0, Measure::Physical).unwrap();
            let total: f64 = law.masses().iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            assert!(law.masses().iter().all(|&m| m >= 0.0));
        }
    }

    #[test]
    fn risk_neutral_measure_uses_hedge_probability() {
        let params = ModelParams::new(0.09, 0.09, 0.55, 0.0, 0.25);
        let dt = 0.02;
        let law = terminal_distribution(1.0, &params, 1, dt, Measure::RiskNeutral { rate: 0.03 }).unwrap();
        let q = risk_neutral_prob(&params, 0.03, dt).unwrap();
        assert_abs_diff_eq!(law.masses()[1], q, epsilon = 1e-14);
    }

    #[test]
    fn lognormal_cdf_values() {
        let (s0, b, s, t): (f64, f64, f64, f64) = (100.0, 0.05, 0.2, 1.0);
        let median = s0 * ((b - 0.5 * s * s) * t).exp();
        assert_abs_diff_eq!(lognormal_cdf(median, s0, b, s, t), 0.5, epsilon = 1e-15);
        assert_eq!(lognormal_cdf(0.0, s0, b, s, t), 0.0);
        assert_eq!(lognormal_cdf(f64::INFINITY, s0, b, s, t), 1.0);
        assert!(lognormal_cdf(1e9, s0, b, s, t) > 1.0 - 1e-15);
        assert_abs_diff_eq!(lognormal_cdf(100.0, s0, b, s, t), 0.440_382_307_629_757_5, epsilon = 1e-13);
    }

    #[test]
    fn single_atom_distance() {
        let atom = DiscreteCdf::new(vec![2.0], vec![1.0]).unwrap();
        let f = |x: f64| norm_cdf(x - 1.5);
        assert_abs_diff_eq!(
            kolmogorov_distance(&atom, f),
            f(2.0).max(1.0 - f(2.0)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn distance_matches_dense_grid_scan() {
        let params = equal_drift(0.5);
        let (t, n) = (1.0, 2);
        let law = terminal_distribution(100.0, &params, n, t / n as f64, Measure::Physical).unwrap();
        let f = |x: f64| lognormal_cdf(x, 100.0, 0.05, 0.2, t);
        let exact = kolmogorov_distance(&law, f);

        // scan a dense grid and both sides of every atom
        let (lo, hi) = (1.0, 400.0);
        let m = 1_000_000;
        let mut scan: f64 = 0.0;
        for k in 0..=m {
            let x = lo + (hi - lo) * k as f64 / m as f64;
            scan = scan.max((law.cdf(x) - f(x)).abs());
        }
        for &x in law.support() {
            scan = scan.max((law.cdf(x) - f(x)).abs());
            let left = x * (1.0 - 1e-15);
            scan = scan.max((law.cdf(left) - f(left)).abs());
        }
        assert_abs_diff_eq!(exact, scan, epsilon = 1e-9);
    }

    #[test]
    fn rescaling_price_leaves_distance_unchanged() {
        // distance of S_T to its lognormal equals distance of the stochastic factor to e^Z
        let params = ModelParams::new(0.08, 0.02, 0.3, 0.0, 0.25);
        let (t, n) = (1.0, 64);
        let b = params.drift();
        let s0 = 80.0;
        let law = terminal_distribution(s0, &params, n, t / n as f64, Measure::Physical).unwrap();
        let full = kolmogorov_distance(&law, |x| lognormal_cdf(x, s0, b, 0.25, t));
        let scale = s0 * ((b - 0.5 * 0.25 * 0.25) * t).exp();
        let unit = DiscreteCdf::new(law.support().iter().map(|x| x / scale).collect(), law.cum().to_vec()).unwrap();
        let standardized = kolmogorov_distance(&unit, |x| norm_cdf(x.ln() / (0.25 * t.sqrt())));
        assert_abs_diff_eq!(full, standardized, epsilon = 1e-12);
    }

    #[test]
    fn rate_constant_values() {
        assert_abs_diff_eq!(rate_constant(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rate_constant(0.9).unwrap(), 0.82 / 0.3, epsilon = 1e-12);
        assert!(rate_constant(0.0).is_err());
        assert!(rate_constant(1.0).is_err());
    }

    #[test]
    fn distance_decays_like_root_n() {
        let ns: Vec<usize> = (4..=11).map(|k| 1usize << k).collect();
        let exp = rate_experiment(&equal_drift(0.5), 1.0, &ns).unwrap();
        assert!((-0.6..=-0.4).contains(&exp.slope), "slope {}", exp.slope);
        let top = &exp.rows[exp.rows.len() / 2..];
        let hi = top.iter().map(|r| r.scaled).fold(f64::MIN, f64::max);
        let lo = top.iter().map(|r| r.scaled).fold(f64::MAX, f64::min);
        assert!(hi / lo < 1.5);
    }

    #[test]
    fn skewed_tree_distance_scales_with_rate_constant() {
        let d = |g: f64| rate_experiment(&equal_drift(g), 1.0, &[2048]).unwrap().rows[0].distance;
        let ratio = d(0.9) / d(0.5);
        let expected = rate_constant(0.9).unwrap() / rate_constant(0.5).unwrap();
        assert!((ratio / expected - 1.0).abs() < 0.25, "ratio {ratio} vs {expected}");
    }

    #[test]
    fn rate_csv_round_trip() {
        let exp = rate_experiment(&equal_drift(0.5), 1.0, &[16, 32]).unwrap();
        let text = exp.to_csv(|x| format!("{x}"));
        assert_eq!(RateExperiment::from_csv(&text).unwrap(), exp);
        assert!(RateExperiment::from_csv("n,distance,scaled_distance\n1,2\n").is_err());
    }

    #[test]
    fn rejects_bad_sweeps() {
        assert!(rate_experiment(&equal_drift(0.5), 1.0, &[]).is_err());
        assert!(rate_experiment(&equal_drift(0.5), 1.0, &[32, 16]).is_err());
        assert!(terminal_distribution(1.0, &equal_drift(0.5), 0, 0.1, Measure::Physical).is_err());
    }

    proptest! {
        #[test]
        fn lognormal_cdf_monotone_and_symmetric(
            x in 0.01f64..500.0,
            step in 0.0f64..50.0,
            a in 0.0f64..3.0,
            b in -0.1f64..0.2,
            sigma in 0.05f64..0.8,
            t in 0.1f64..3.0,
        ) {
            let f = |x| lognormal_cdf(x, 100.0, b, sigma, t);
            prop_assert!(f(x) <= f(x + step));
            let median = 100.0 * ((b - 0.5 * sigma * sigma) * t).exp();
            prop_assert!((f(median * a.exp()) + f(median * (-a).exp()) - 1.0).abs() < 1e-10);
        }

        #[test]
        fn distance_lies_in_unit_interval(g in 0.05f64..0.95, n in 1usize..200) {
            let params = equal_drift(g);
            let law = terminal_distribution(1.0, &params, n, 1.0 / n as f64, Measure::Physical).unwrap();
            let d = kolmogorov_distance(&law, |x| lognormal_cdf(x, 1.0, 0.05, 0.2, 1.0));
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert!(d > 0.0);
        }
    }
}

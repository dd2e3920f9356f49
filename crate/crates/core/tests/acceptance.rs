//! Acceptance checks. Each criterion prints one `PASS` or `FAIL` line; the
//! process fails if any criterion fails.

use std::time::{Duration, Instant};

use mpbin::analytic::black_scholes_call;
use mpbin::calibration::{calibrate_all, model_prices, CalibrationConfig, OptionQuote, TreeModel, TRADING_DAY};
use mpbin::cli::worst_halving_ratio;
use mpbin::convergence::{rate_constant, rate_experiment};
use mpbin::lattice::{discontinuity_report, price_european, risk_neutral_prob, risk_neutral_prob_equal_drift, Lattice, Payoff};
use mpbin::model::{
    crr_factors, crr_params, gbm_moment, jarrow_rudd_factors, jarrow_rudd_params, step_factors_exact, step_moment,
    tian_factors, tian_params, FactorForm, ModelParams, StepFactors,
};
use mpbin::stats::{exact_binomial_test, homogeneity_test, proportion_ci, UpDownCounts};

struct Outcome {
    ok: bool,
    detail: String,
}

fn criterion(id: u32, title: &str, limit: Duration, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let ok = outcome.ok && elapsed < limit;
    println!(
        "{} criterion {id}: {title} [{}; {:.3}s of {}s]",
        if ok { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn halving_sweep() -> Vec<f64> {
    (0..=5).map(|h| TRADING_DAY / 2f64.powi(h)).collect()
}

fn moment_matching() -> Outcome {
    let mut worst = 1.0f64;
    for g in [0.1, 0.5, 0.9] {
        let params = ModelParams::new(0.05, 0.05, g, 0.0, 0.2);
        for j in 1..=8 {
            let scaled: Vec<f64> = halving_sweep()
                .into_iter()
                .map(|dt| {
                    let e = step_moment(&params, dt, j).unwrap() - gbm_moment(0.05, 0.2, dt, j).unwrap();
                    e.abs() / (dt * dt)
                })
                .collect();
            worst = worst.max(worst_halving_ratio(&scaled));
        }
    }
    Outcome {
        ok: worst <= 4.0,
        detail: format!("largest change of error/dt^2 per halving {worst:.4}, limit 4"),
    }
}

fn reductions() -> Outcome {
    let (r, sigma) = (0.05, 0.2);
    type Pair = (&'static str, fn(f64, f64) -> ModelParams, fn(f64, f64, f64) -> StepFactors);
    let cases: [Pair; 3] = [
        ("CRR", crr_params, crr_factors),
        ("JR", jarrow_rudd_params, jarrow_rudd_factors),
        ("Tian", tian_params, tian_factors),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, params, classical) in cases {
        let mut du = Vec::new();
        let mut dp = Vec::new();
        for dt in halving_sweep() {
            let mp = step_factors_exact(&params(r, sigma), dt).unwrap();
            let cl = classical(r, sigma, dt);
            du.push((mp.u - cl.u).abs().max((mp.d - cl.d).abs()) / dt.powf(1.5));
            dp.push((mp.p - cl.p).abs() / dt);
        }
        // a lower order would grow by sqrt(2) per halving, 5.7 over the sweep
        let growth = |v: &[f64]| {
            let peak_late = v[3..].iter().cloned().fold(0.0, f64::max);
            let peak_early = v[..3].iter().cloned().fold(0.0, f64::max);
            if peak_late == 0.0 { 1.0 } else { peak_late / peak_early }
        };
        let (gu, gp) = (growth(&du), growth(&dp));
        let bound_u = du.iter().cloned().fold(0.0, f64::max);
        let bound_p = dp.iter().cloned().fold(0.0, f64::max);
        ok &= gu <= 1.2 && gp <= 1.2 && bound_u.is_finite() && bound_p.is_finite();
        parts.push(format!("{name} max|du|/dt^1.5={bound_u:.3} growth {gu:.3}, max|dp|/dt={bound_p:.3} growth {gp:.3}"));
    }
    Outcome {
        ok,
        detail: parts.join("; "),
    }
}

fn convergence_rate() -> Outcome {
    let ns: Vec<usize> = (4..=11).map(|k| 1usize << k).collect();
    let mut ok = true;
    let mut at_end = Vec::new();
    let mut parts = Vec::new();
    for g in [0.3, 0.5, 0.7] {
        let params = ModelParams::new(0.05, 0.05, g, 0.0, 0.2);
        let exp = rate_experiment(&params, 1.0, &ns).unwrap();
        ok &= (-0.6..=-0.4).contains(&exp.slope);
        at_end.push(exp.rows.last().unwrap().distance);
        parts.push(format!("slope(g={g})={:.4}", exp.slope));
    }
    for (i, g) in [(0, 0.3), (2, 0.7)] {
        let observed = at_end[i] / at_end[1];
        let predicted = rate_constant(g).unwrap() / rate_constant(0.5).unwrap();
        let rel = (observed / predicted - 1.0).abs();
        ok &= rel <= 0.25;
        parts.push(format!("ratio(g={g})={observed:.4} vs {predicted:.4}"));
    }
    Outcome {
        ok,
        detail: parts.join(", "),
    }
}

fn black_scholes_limit() -> Outcome {
    let params = ModelParams::new(0.05, 0.05, 0.5, 0.0, 0.2);
    let lattice = Lattice::with_maturity(100.0, &params, 1000, 1.0, 0.05, FactorForm::Exact).unwrap();
    let tree = price_european(&lattice, &params, &Payoff::call(100.0)).unwrap();
    let closed = black_scholes_call(100.0, 100.0, 0.05, 0.2, 1.0);
    Outcome {
        ok: (tree - closed).abs() < 0.01,
        detail: format!("tree {tree:.6}, closed form {closed:.6}"),
    }
}

fn published_counts() -> Outcome {
    let counts = UpDownCounts::new(8836, 16703).unwrap();
    let p_hat = counts.p_hat();
    let ci = proportion_ci(counts, 0.95).unwrap();
    let p_value = exact_binomial_test(counts, 0.5).unwrap();
    let ok = format!("{p_hat:.3}") == "0.529"
        && (ci.low - 0.5214).abs() <= 5e-4
        && (ci.high - 0.5366).abs() <= 5e-4
        && p_value < 0.05;
    Outcome {
        ok,
        detail: format!("p_hat {p_hat:.5}, CI [{:.5}, {:.5}], exact p-value {p_value:.3e}", ci.low, ci.high),
    }
}

fn synthetic_chain(params: &ModelParams, s0: f64, r: f64) -> Vec<OptionQuote> {
    let mut shape = Vec::new();
    for days in [10u32, 30, 60] {
        for strike in [90.0, 95.0, 100.0, 105.0, 110.0] {
            shape.push(OptionQuote::new(strike, days, 1.0).unwrap());
        }
    }
    let prices = model_prices(params, &shape, s0, r, TRADING_DAY).unwrap();
    shape
        .iter()
        .zip(prices)
        .map(|(q, p)| OptionQuote::new(q.strike, q.days_to_maturity, p).unwrap())
        .collect()
}

fn round_trip_calibration() -> Outcome {
    let (s0, r) = (100.0, 0.03);
    let gamma = 0.08;
    let g = 0.4;
    let truths = [
        (TreeModel::Crr, crr_params(r, 0.2)),
        (TreeModel::JarrowRudd, jarrow_rudd_params(r, 0.25)),
        (TreeModel::Tian, tian_params(r, 0.3)),
        (TreeModel::MpBin1, ModelParams::new(r, r, 0.55, 0.0, 0.2)),
        (
            TreeModel::MpBin2,
            ModelParams::new(gamma, r + g * (r - gamma) / (1.0 - g), g, (0.45 - g) / TRADING_DAY.sqrt(), 0.22),
        ),
    ];
    let config = CalibrationConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (source, truth) in truths {
        let quotes = synthetic_chain(&truth, s0, r);
        let fits = calibrate_all(&quotes, s0, r, &config).unwrap();
        let rmse = |m: TreeModel| fits.iter().find(|f| f.model == m).unwrap().metrics.rmse;
        let own = rmse(source);
        let classical = rmse(TreeModel::Crr).min(rmse(TreeModel::JarrowRudd)).min(rmse(TreeModel::Tian));
        let nested = rmse(TreeModel::MpBin2) <= rmse(TreeModel::MpBin1) && rmse(TreeModel::MpBin1) <= classical;
        ok &= own < 1e-6 * s0 && nested;
        parts.push(format!(
            "{source}: own {own:.2e}, MPBin2 {:.2e} <= MPBin1 {:.2e} <= classical {classical:.2e} {}",
            rmse(TreeModel::MpBin2),
            rmse(TreeModel::MpBin1),
            if nested { "ok" } else { "broken" }
        ));
    }
    Outcome {
        ok,
        detail: parts.join("; "),
    }
}

fn discontinuity() -> Outcome {
    let call = Payoff::call(100.0);
    let reports: Vec<_> = [0.01, 0.5, 0.99]
        .iter()
        .map(|&p| discontinuity_report(100.0, 0.0, 0.2, 1.0, &call, p).unwrap())
        .collect();
    let f0 = reports[0].f0_interior;
    let constant = reports.iter().all(|r| r.f0_interior == f0 && r.f0_at_p == f0);
    let gap_ok = reports.iter().all(|r| (r.gap_at_0 + f0).abs() <= 1e-12);

    // gamma = delta: Q(p) = p - theta sqrt(p(1-p) dt)
    let (drift, r, sigma, dt) = (0.08, 0.02, 0.2, TRADING_DAY);
    let theta = (drift - r) / sigma;
    let q = |p: f64| risk_neutral_prob_equal_drift(p, theta, dt);
    let lo = q(1e-6);
    let hi = q(1.0 - 1e-6);
    // |Q - p| is at most theta sqrt(p(1-p) dt), attained exactly here
    let bound = (theta * (1e-6 * (1.0 - 1e-6) * dt).sqrt() + 1e-6) * (1.0 + 1e-9);
    let endpoints = lo.abs() <= bound && (1.0 - hi).abs() <= bound;
    // the validated form agrees in the interior, and the map has no jumps on a fine grid
    let agrees = [0.05, 0.3, 0.5, 0.7, 0.95].iter().all(|&p| {
        let v = risk_neutral_prob(&ModelParams::new(drift, drift, p, 0.0, sigma), r, dt).unwrap();
        (v - q(p)).abs() <= 1e-15
    });
    let steps = 100_000;
    let max_jump = (0..steps)
        .map(|i| {
            let (a, b) = (i as f64 / steps as f64, (i + 1) as f64 / steps as f64);
            (q(b) - q(a)).abs()
        })
        .fold(0.0, f64::max);
    let continuous = max_jump < 1e-3;
    Outcome {
        ok: constant && gap_ok && endpoints && agrees && continuous,
        detail: format!(
            "f0_interior {f0:.12}, gap_at_0 {:.12}, Q(1e-6) {lo:.3e}, 1-Q(1-1e-6) {:.3e}, largest grid jump {max_jump:.2e}",
            reports[0].gap_at_0,
            1.0 - hi
        ),
    }
}

fn statistical_kernels() -> Outcome {
    let p = exact_binomial_test(UpDownCounts::new(9, 10).unwrap(), 0.5).unwrap();
    let t = homogeneity_test(&[UpDownCounts::new(60, 100).unwrap(), UpDownCounts::new(40, 100).unwrap()]).unwrap();
    let ok = (p - 22.0 / 1024.0).abs() <= 1e-15
        && (t.statistic - 8.0).abs() <= 1e-9
        && t.df == 1
        && (t.p_value - 0.004678).abs() <= 1e-6;
    Outcome {
        ok,
        detail: format!("exact p-value {p} vs 22/1024, chi-square {} on {} df, p {:.7}", t.statistic, t.df, t.p_value),
    }
}

fn main() {
    let second = Duration::from_secs(1);
    let results = [
        criterion(1, "one-step moments match the lognormal step to order dt^2", second, moment_matching),
        criterion(2, "CRR, Jarrow-Rudd and Tian are recovered as special cases", second, reductions),
        criterion(3, "Kolmogorov distance decays like n^-1/2 with the predicted p-dependence", Duration::from_secs(30), convergence_rate),
        criterion(4, "MP-Bin1 at-the-money call converges to Black-Scholes", second, black_scholes_limit),
        criterion(5, "published up-day counts give the published estimate and interval", second, published_counts),
        criterion(6, "round-trip calibration and nesting of fitted errors", Duration::from_secs(60), round_trip_calibration),
        criterion(7, "one-step discontinuity and continuity of the hedge probability", second, discontinuity),
        criterion(8, "exact binomial and chi-square kernels", second, statistical_kernels),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// Hedge probability and hedge ratio, and how they behave as p moves to the ends.
//
// Run with `cargo run --example risk_neutral_delta`.

use mpbin::lattice::{delta_hedge, market_price_of_risk, risk_neutral_prob_equal_drift};
use mpbin::{risk_neutral_prob, FactorForm, ModelParams, Payoff};

pub fn run_example() -> mpbin::Result<()> {
    let (r, dt, s) = (0.02, 0.01, 100.0);
    let params = ModelParams::new(0.08, 0.08, 0.6, 0.0, 0.2);
    let theta = market_price_of_risk(&params, r)?;
    let q = risk_neutral_prob(&params, r, dt)?;
    println!("p = 0.6, theta = {theta:.3}, Q = {q:.6}");

    // one-step hedge of a call struck at the spot
    let f = params.step_factors(dt, FactorForm::Asymptotic)?;
    let call = Payoff::call(s);
    let (fu, fd) = (call.value(s * f.u), call.value(s * f.d));
    let delta = delta_hedge(s, fu, fd, &params, dt)?;
    let value = (-r * dt).exp() * (q * fu + (1.0 - q) * fd);
    println!("u = {:.6}, d = {:.6}, delta = {delta:.6}, value = {value:.6}", f.u, f.d);

    println!("Q as p moves to the ends (theta = {theta}):");
    for p in [1e-6, 1e-3, 0.1, 0.5, 0.9, 1.0 - 1e-3, 1.0 - 1e-6] {
        println!("  p = {p:<10} Q = {:.8}", risk_neutral_prob_equal_drift(p, theta, dt));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mpbin::Result<()> {
    run_example()
}

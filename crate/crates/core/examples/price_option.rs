// Prices an at-the-money call on each tree and compares with Black-Scholes.
//
// Run with `cargo run --example price_option`.

use mpbin::analytic::black_scholes_call;
use mpbin::model::{crr_params, jarrow_rudd_params, tian_params};
use mpbin::{price_european, FactorForm, Lattice, ModelParams, Payoff};

pub fn run_example() -> mpbin::Result<()> {
    let (s0, strike, r, sigma, t) = (100.0, 100.0, 0.05, 0.2, 1.0);
    let call = Payoff::call(strike);
    let closed = black_scholes_call(s0, strike, r, sigma, t);
    println!("Black-Scholes: {closed:.6}");

    let trees = [
        ("CRR", crr_params(r, sigma)),
        ("Jarrow-Rudd", jarrow_rudd_params(r, sigma)),
        ("Tian", tian_params(r, sigma)),
        ("MP-Bin1 g=0.5", ModelParams::new(r, r, 0.5, 0.0, sigma)),
        ("MP-Bin1 g=0.3", ModelParams::new(r, r, 0.3, 0.0, sigma)),
    ];
    println!("{:<14} {:>6} {:>12} {:>10}", "tree", "n", "price", "error");
    for (name, params) in trees {
        for n in [50, 200, 1000] {
            let lattice = Lattice::with_maturity(s0, &params, n, t, r, FactorForm::Exact)?;
            let price = price_european(&lattice, &params, &call)?;
            println!("{name:<14} {n:>6} {price:>12.6} {:>10.2e}", price - closed);
        }
    }

    // first-order factors converge to the same limit
    let params = ModelParams::new(r, r, 0.5, 0.0, sigma);
    let lattice = Lattice::with_maturity(s0, &params, 1000, t, r, FactorForm::Asymptotic)?;
    println!("asymptotic factors, n=1000: {:.6}", price_european(&lattice, &params, &call)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> mpbin::Result<()> {
    run_example()
}

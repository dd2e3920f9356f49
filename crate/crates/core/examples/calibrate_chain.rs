// Generates a call chain from an MP-Bin2 tree and fits every model to it.
//
// Run with `cargo run --example calibrate_chain`.

use mpbin::calibration::{calibrate_all, model_prices, report_csv, CalibrationConfig, OptionQuote, TRADING_DAY};
use mpbin::io::{format_chain, ChainFile};
use mpbin::ModelParams;

pub fn run_example() -> mpbin::Result<()> {
    let (s0, r) = (100.0, 0.03);
    let (gamma, g, p) = (0.08, 0.4, 0.45);
    let delta = r + g * (r - gamma) / (1.0 - g);
    let truth = ModelParams::new(gamma, delta, g, (p - g) / TRADING_DAY.sqrt(), 0.22);

    let mut quotes = Vec::new();
    for days in [10, 30, 60] {
        for strike in [90.0, 95.0, 100.0, 105.0, 110.0] {
            let probe = OptionQuote::new(strike, days, 1.0)?;
            let price = model_prices(&truth, &[probe], s0, r, TRADING_DAY)?[0];
            quotes.push(OptionQuote::new(strike, days, price)?);
        }
    }
    let chain = ChainFile { spot: s0, rate: r, quotes };
    println!("{}", format_chain(&chain).lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("...");

    let fits = calibrate_all(&chain.quotes, s0, r, &CalibrationConfig::default())?;
    print!("{}", report_csv(&fits, TRADING_DAY, |x| format!("{x:.6}")));
    Ok(())
}

#[allow(dead_code)]
fn main() -> mpbin::Result<()> {
    run_example()
}

// Kolmogorov distance between the n-step tree and its lognormal limit.
//
// Run with `cargo run --example convergence_rate`.

use mpbin::convergence::{rate_constant, rate_experiment};
use mpbin::ModelParams;

pub fn run_example() -> mpbin::Result<()> {
    let ns: Vec<usize> = (4..=11).map(|k| 1 << k).collect();
    for g in [0.3, 0.5, 0.7] {
        let params = ModelParams::new(0.05, 0.05, g, 0.0, 0.2);
        let exp = rate_experiment(&params, 1.0, &ns)?;
        println!("g = {g}, rate constant {:.4}", rate_constant(g)?);
        print!("{}", exp.to_csv(|x| format!("{x:.6}")));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mpbin::Result<()> {
    run_example()
}

// One-step moments of the tree against the lognormal step, as dt halves.
//
// Run with `cargo run --example moment_matching`.

use mpbin::model::{gbm_moment, step_moment};
use mpbin::ModelParams;

pub fn run_example() -> mpbin::Result<()> {
    let (b, sigma) = (0.05, 0.2);
    for g in [0.1, 0.5, 0.9] {
        let params = ModelParams::new(b, b, g, 0.0, sigma);
        println!("g = {g}: |tree - lognormal| / dt^2");
        for j in [1, 2, 4, 8] {
            let row: Vec<String> = (0..6)
                .map(|h| {
                    let dt = 1.0 / 252.0 / 2f64.powi(h);
                    let e = step_moment(&params, dt, j).and_then(|m| Ok(m - gbm_moment(b, sigma, dt, j)?));
                    e.map(|e| format!("{:9.5}", e.abs() / (dt * dt)))
                })
                .collect::<mpbin::Result<_>>()?;
            println!("  j={j}: {}", row.join(" "));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> mpbin::Result<()> {
    run_example()
}

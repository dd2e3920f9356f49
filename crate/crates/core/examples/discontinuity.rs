// One-step classical tree: the option value ignores p inside (0, 1) and jumps at the ends.
//
// Run with `cargo run --example discontinuity`.

use mpbin::lattice::discontinuity_report;
use mpbin::Payoff;

pub fn run_example() -> mpbin::Result<()> {
    let call = Payoff::call(100.0);
    for p in [0.0, 1e-9, 0.01, 0.5, 0.99, 1.0 - 1e-9, 1.0] {
        let rep = discontinuity_report(100.0, 0.0, 0.2, 1.0, &call, p)?;
        println!("p = {p:<12} f0 = {:.6}", rep.f0_at_p);
    }
    let rep = discontinuity_report(100.0, 0.0, 0.2, 1.0, &call, 0.5)?;
    println!("jump at p = 0: {:.6}", rep.gap_at_0);
    println!("jump at p = 1: {:.6}", rep.gap_at_1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> mpbin::Result<()> {
    run_example()
}

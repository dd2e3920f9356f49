// Up-day probability from a simulated return series, per year and overall.
//
// Run with `cargo run --example estimate_up_probability`.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpbin::stats::{
    exact_binomial_test, grouped_estimates, homogeneity_test, proportion_ci, up_proportion, yearly_csv,
    UpDownCounts,
};

pub fn run_example() -> mpbin::Result<()> {
    // published index counts first
    let published = UpDownCounts::new(8836, 16703)?;
    let ci = proportion_ci(published, 0.95)?;
    println!(
        "8836/16703: p_hat {:.4}, 95% CI [{:.4}, {:.4}], exact test p-value {:.2e}",
        published.p_hat(),
        ci.low,
        ci.high,
        exact_binomial_test(published, 0.5)?
    );

    // four years of 252 days, the last one drifting upward more often
    let mut rng = ChaCha8Rng::seed_from_u64(2008);
    let start = NaiveDate::from_ymd_opt(2005, 1, 3).expect("valid date");
    let mut rows = Vec::new();
    for year in 0..4u64 {
        let p = if year == 3 { 0.6 } else { 0.53 };
        for day in 0..252u64 {
            let date = start + Days::new(year * 365 + day);
            let up = rng.gen_bool(p);
            let size: f64 = rng.gen_range(0.001..0.02);
            rows.push((date, if up { size } else { -size }));
        }
    }
    let returns: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let all = up_proportion(&returns)?;
    println!("simulated: {}/{} up days", all.ups, all.total);

    let years = grouped_estimates(&rows, 0.95)?;
    print!("{}", yearly_csv(&years, |x| format!("{x:.4}")));
    let test = homogeneity_test(&years.iter().map(|y| y.counts).collect::<Vec<_>>())?;
    println!(
        "equal yearly probabilities: chi-square {:.3} on {} df, p-value {:.4}",
        test.statistic, test.df, test.p_value
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> mpbin::Result<()> {
    run_example()
}

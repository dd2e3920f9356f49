use std::fs;
use std::path::Path;

use mpbin::calibration::parse_report_csv;
use mpbin::cli::run;
use mpbin::convergence::RateExperiment;
use mpbin::stats::parse_yearly_csv;

fn mpbin(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("mpbin").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn meta(out: &str, key: &str) -> f64 {
    let prefix = format!("# {key}=");
    out.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key} in\n{out}"))
        .parse()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn price_crr_near_black_scholes() {
    let (code, out, _) = mpbin(&[
        "price", "--model", "crr", "--s0", "100", "--strike", "100", "--r", "0.05", "--sigma", "0.2", "--T", "1", "--n",
        "1000",
    ]);
    assert_eq!(code, 0);
    let price: f64 = out.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((price - 10.4506).abs() < 0.01, "{price}");
}

#[test]
fn price_mp_tree_with_k_alias_and_put() {
    let (code, out, err) = mpbin(&[
        "price", "--model", "mp", "--s0", "100", "--K", "100", "--r", "0.05", "--sigma", "0.2", "--T", "1", "--n",
        "500", "--g", "0.4", "--payoff", "put",
    ]);
    assert_eq!(code, 0, "{err}");
    let put: f64 = out.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    // put-call parity against the Black-Scholes put 5.5735
    assert!((put - 5.5735).abs() < 0.02, "{put}");
}

#[test]
fn estimate_p_on_published_counts() {
    let dir = tempfile::tempdir().unwrap();
    // 8836 up days out of 16703, laid out over consecutive days from 1940
    let start = chrono::NaiveDate::from_ymd_opt(1940, 1, 1).unwrap();
    let mut text = String::from("date,value\n");
    for i in 0..16703u64 {
        let date = start + chrono::Days::new(i);
        let r = if i < 8836 { 0.004 } else { -0.003 };
        text.push_str(&format!("{date},{r}\n"));
    }
    let file = write(dir.path(), "returns.csv", &text);
    let (code, out, err) = mpbin(&["estimate-p", "--returns", &file]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(meta(&out, "ups"), 8836.0);
    assert_eq!(format!("{:.3}", meta(&out, "p_hat")), "0.529");
    assert!((meta(&out, "ci_low") - 0.5214).abs() < 5e-4);
    assert!((meta(&out, "ci_high") - 0.5366).abs() < 5e-4);
    assert!(meta(&out, "exact_test_p_value") < 0.05);
    let years = parse_yearly_csv(&out).unwrap();
    assert_eq!(years.first().unwrap().year, 1940);
    assert_eq!(years.iter().map(|y| y.counts.total).sum::<u64>(), 16703);
    assert!(meta(&out, "homogeneity_p_value") < 1e-6);
}

#[test]
fn estimate_p_from_prices_without_grouping() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "prices.csv", "2008-01-02,100\n2008-01-03,101\n2008-01-04,99\n");
    let (code, out, _) = mpbin(&["estimate-p", "--returns", &file, "--kind", "price", "--grouping", "none"]);
    assert_eq!(code, 0);
    assert_eq!(meta(&out, "ups"), 1.0);
    assert_eq!(meta(&out, "total"), 2.0);
    assert!(!out.contains("year,"));

    let single = write(dir.path(), "one.csv", "2008-01-02,100\n");
    let (code, _, err) = mpbin(&["estimate-p", "--returns", &single, "--kind", "price"]);
    assert_eq!(code, 1);
    assert!(err.contains("empty"));
}

#[test]
fn moments_all_pass_in_the_matching_setting() {
    let (code, out, _) = mpbin(&["moments", "--j-max", "8"]);
    assert_eq!(code, 0);
    let verdicts: Vec<&str> = out.lines().filter(|l| l.starts_with("# j=")).collect();
    assert_eq!(verdicts.len(), 8);
    assert!(verdicts.iter().all(|l| l.ends_with("PASS")), "{out}");
}

#[test]
fn converge_output_reads_back() {
    let (code, out, _) = mpbin(&["converge", "--g", "0.3", "--n", "16,64,256", "--full-precision"]);
    assert_eq!(code, 0);
    let exp = RateExperiment::from_csv(&out).unwrap();
    assert_eq!(exp.rows.len(), 3);
    assert!((-0.6..=-0.4).contains(&exp.slope));
    let (code, _, _) = mpbin(&["converge", "--n", "64,16"]);
    assert_eq!(code, 1);
}

#[test]
fn demo_discontinuity_gaps() {
    let (code, out, _) = mpbin(&["demo-discontinuity", "--full-precision"]);
    assert_eq!(code, 0);
    let f0 = meta(&out, "f0_interior");
    assert!((meta(&out, "gap_at_0") + f0).abs() < 1e-12);
    assert!(out.contains("\n0,0\n"));
}

const CHAIN: &str = "# spot=100
# rate=0.03
strike,days_to_maturity,market_price
95,20,6.1
100,20,2.6
105,20,0.8
100,150,7.9
";

#[test]
fn calibrate_report_reads_back_and_honours_config() {
    let dir = tempfile::tempdir().unwrap();
    let chain = write(dir.path(), "chain.csv", CHAIN);
    let config = write(dir.path(), "run.cfg", "maturity_filter=true\noptimizer_restarts=1\n");
    let (code, out, err) = mpbin(&["--config", &config, "calibrate", "--chain", &chain, "--models", "mpbin1,crr"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(meta(&out, "quotes"), 3.0);
    let fits = parse_report_csv(&out).unwrap();
    assert_eq!(fits.len(), 2);
    assert_eq!(fits[0].model.to_string(), "CRR");
    assert!(fits[1].metrics.rmse <= fits[0].metrics.rmse * (1.0 + 1e-5));

    let (code, _, err) = mpbin(&["calibrate", "--chain", &chain, "--models", "trinomial"]);
    assert_eq!(code, 1);
    assert!(err.contains("trinomial"));
}

#[test]
fn bad_config_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.cfg", "optimizer_restarts=-1\n");
    let (code, _, err) = mpbin(&["--config", &config, "moments"]);
    assert_eq!(code, 1);
    assert!(err.contains("bad.cfg:1"), "{err}");
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let chain = write(dir.path(), "chain.csv", CHAIN);
    let args = ["calibrate", "--chain", chain.as_str(), "--models", "jr,mpbin2"];
    assert_eq!(mpbin(&args).1, mpbin(&args).1);
}

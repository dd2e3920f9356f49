//! Closed-form lognormal prices, used as the continuous-time reference.

use crate::special::norm_cdf;

fn d1_d2(s0: f64, k: f64, r: f64, sigma: f64, t: f64) -> (f64, f64) {
    let vol = sigma * t.sqrt();
    let d1 = ((s0 / k).ln() + (r + 0.5 * sigma * sigma) * t) / vol;
    (d1, d1 - vol)
}

/// Black-Scholes European call.
pub fn black_scholes_call(s0: f64, k: f64, r: f64, sigma: f64, t: f64) -> f64 {
    if k <= 0.0 {
        return s0;
    }
    let (d1, d2) = d1_d2(s0, k, r, sigma, t);
    s0 * norm_cdf(d1) - k * (-r * t).exp() * norm_cdf(d2)
}

/// Black-Scholes European put.
pub fn black_scholes_put(s0: f64, k: f64, r: f64, sigma: f64, t: f64) -> f64 {
    let (d1, d2) = d1_d2(s0, k, r, sigma, t);
    k * (-r * t).exp() * norm_cdf(-d2) - s0 * norm_cdf(-d1)
}

//! Recombining lattice pricing under the multi-purpose tree.
//!
//! The risk-neutral branch probability comes from a variance-zero hedge of
//! the asymptotic one-step factors:
//!
//! ```text
//! Q = ((r - delta) sqrt(p(1-p)) sqrt(dt) + p sigma) / ((gamma - delta) sqrt(p(1-p)) sqrt(dt) + sigma)
//! ```
//!
//! which is continuous in the physical probability `p` and tends to 0 and 1
//! at the ends of (0, 1). The classical one-step tree, whose option value
//! ignores `p` entirely, jumps at those ends; [`discontinuity_report`]
//! measures the jumps.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{FactorForm, ModelParams, StepFactors};

/// European payoff on the terminal price.
#[derive(Clone)]
pub enum Payoff {
    Call { strike: f64 },
    Put { strike: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Payoff {
    pub fn call(strike: f64) -> Self {
        Payoff::Call { strike }
    }

    pub fn put(strike: f64) -> Self {
        Payoff::Put { strike }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Payoff::Custom(Arc::new(f))
    }

    pub fn value(&self, spot: f64) -> f64 {
        match self {
            Payoff::Call { strike } => (spot - strike).max(0.0),
            Payoff::Put { strike } => (strike - spot).max(0.0),
            Payoff::Custom(f) => f(spot),
        }
    }
}

impl fmt::Debug for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payoff::Call { strike } => write!(f, "Call({strike})"),
            Payoff::Put { strike } => write!(f, "Put({strike})"),
            Payoff::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// How the branch probability used for discounting is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbabilityRule {
    /// The variance-zero hedge probability from [`risk_neutral_prob`].
    #[default]
    Hedge,
    /// `(e^{r dt} - d) / (u - d)` on the lattice's own factors.
    Replicating,
}

/// A recombining binomial lattice with `n` steps of length `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub s0: f64,
    pub n: usize,
    pub dt: f64,
    pub factors: StepFactors,
    pub rate: f64,
}

impl Lattice {
    pub fn new(
        s0: f64,
        params: &ModelParams,
        n: usize,
        dt: f64,
        rate: f64,
        form: FactorForm,
    ) -> Result<Self> {
        if !(s0 > 0.0) || !s0.is_finite() {
            return Err(Error::domain(format!("spot must be positive, got {s0}")));
        }
        if n == 0 {
            return Err(Error::domain("lattice needs at least one step"));
        }
        let factors = params.step_factors(dt, form)?;
        Ok(Self {
            s0,
            n,
            dt,
            factors,
            rate,
        })
    }

    /// Lattice over `[0, maturity]` with `n` equal steps.
    pub fn with_maturity(
        s0: f64,
        params: &ModelParams,
        n: usize,
        maturity: f64,
        rate: f64,
        form: FactorForm,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("lattice needs at least one step"));
        }
        Self::new(s0, params, n, maturity / n as f64, rate, form)
    }

    pub fn maturity(&self) -> f64 {
        self.n as f64 * self.dt
    }

    /// Price after `step` steps with `ups` up-moves: `s0 u^ups d^(step-ups)`.
    pub fn node_value(&self, step: usize, ups: usize) -> f64 {
        debug_assert!(ups <= step);
        let ln = self.s0.ln()
            + ups as f64 * self.factors.u.ln()
            + (step - ups) as f64 * self.factors.d.ln();
        ln.exp()
    }

    /// Node values at one step, ordered by number of up-moves.
    pub fn layer(&self, step: usize) -> Vec<f64> {
        (0..=step).map(|i| self.node_value(step, i)).collect()
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.dt).exp()
    }
}

/// Risk-neutral probability of the up branch.
pub fn risk_neutral_prob(params: &ModelParams, r: f64, dt: f64) -> Result<f64> {
    let params = params.validate(dt)?;
    let p = params.p_up(dt);
    let spread = (p * (1.0 - p)).sqrt() * dt.sqrt();
    let den = (params.gamma - params.delta) * spread + params.sigma;
    if !(den > 0.0) {
        return Err(Error::Arbitrage(format!(
            "hedge denominator {den} is not positive"
        )));
    }
    let q = ((r - params.delta) * spread + p * params.sigma) / den;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Arbitrage(format!(
            "risk-neutral probability {q} outside [0, 1]; rate {r} outside the one-step band"
        )));
    }
    Ok(q)
}

/// Equal-drift form `p - theta sqrt(p(1-p)) sqrt(dt)` with `theta = (gamma - r)/sigma`.
///
/// Agrees with [`risk_neutral_prob`] whenever `gamma == delta`.
pub fn risk_neutral_prob_equal_drift(p: f64, theta: f64, dt: f64) -> f64 {
    p - theta * (p * (1.0 - p)).sqrt() * dt.sqrt()
}

/// Market price of risk `(gamma - r) / sigma`; only defined for equal branch drifts.
pub fn market_price_of_risk(params: &ModelParams, r: f64) -> Result<f64> {
    if params.gamma != params.delta {
        return Err(Error::domain(format!(
            "market price of risk needs gamma == delta, got {} and {}",
            params.gamma, params.delta
        )));
    }
    if !(params.sigma > 0.0) {
        return Err(Error::domain("sigma must be positive"));
    }
    Ok((params.gamma - r) / params.sigma)
}

/// Variance-zero hedge ratio for one step from spot `s` to values `(f_u, f_d)`.
pub fn delta_hedge(s: f64, f_u: f64, f_d: f64, params: &ModelParams, dt: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("spot must be positive, got {s}")));
    }
    let params = params.validate(dt)?;
    let p = params.p_up(dt);
    let den = (params.gamma - params.delta) * dt
        + params.sigma * dt.sqrt() / (p * (1.0 - p)).sqrt();
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Degenerate(format!("hedge denominator {den}")));
    }
    Ok((f_u - f_d) / (s * den))
}

/// Backward induction with the hedge probability.
pub fn price_european(lattice: &Lattice, params: &ModelParams, payoff: &Payoff) -> Result<f64> {
    price_european_with(lattice, params, payoff, ProbabilityRule::Hedge)
}

pub fn price_european_with(
    lattice: &Lattice,
    params: &ModelParams,
    payoff: &Payoff,
    rule: ProbabilityRule,
) -> Result<f64> {
    let q = match rule {
        ProbabilityRule::Hedge => risk_neutral_prob(params, lattice.rate, lattice.dt)?,
        ProbabilityRule::Replicating => {
            let StepFactors { u, d, .. } = lattice.factors;
            let q = ((lattice.rate * lattice.dt).exp() - d) / (u - d);
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Arbitrage(format!(
                    "replicating probability {q} outside [0, 1]"
                )));
            }
            q
        }
    };
    Ok(backward_induction(lattice, q, payoff))
}

fn backward_induction(lattice: &Lattice, q: f64, payoff: &Payoff) -> f64 {
    let n = lattice.n;
    let mut values: Vec<f64> = (0..=n)
        .map(|i| payoff.value(lattice.node_value(n, i)))
        .collect();
    let disc = lattice.discount();
    let (qu, qd) = (disc * q, disc * (1.0 - q));
    for step in (0..n).rev() {
        for i in 0..=step {
            values[i] = qu * values[i + 1] + qd * values[i];
        }
    }
    values[0]
}

/// One-step classical-tree values around the endpoints of the physical probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscontinuityReport {
    /// Value for any `p` strictly inside (0, 1).
    pub f0_interior: f64,
    /// Value at the requested `p`, including the endpoints.
    pub f0_at_p: f64,
    /// `f0(0) - lim_{p -> 0+} f0(p)`.
    pub gap_at_0: f64,
    /// `f0(1) - lim_{p -> 1-} f0(p)`.
    pub gap_at_1: f64,
}

/// One-step tree with `u = e^{sigma sqrt(t)}`, `d = 1/u`, evaluated at physical probability `p`.
pub fn discontinuity_report(
    s0: f64,
    r: f64,
    sigma: f64,
    t: f64,
    payoff: &Payoff,
    p: f64,
) -> Result<DiscontinuityReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    if !(sigma > 0.0 && t > 0.0 && s0 > 0.0) {
        return Err(Error::domain("s0, sigma and t must be positive"));
    }
    let u = (sigma * t.sqrt()).exp();
    let d = 1.0 / u;
    let growth = (r * t).exp();
    let q = (growth - d) / (u - d);
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Arbitrage(format!("one-step probability {q} outside (0, 1)")));
    }
    let disc = 1.0 / growth;
    let f_u = payoff.value(s0 * u);
    let f_d = payoff.value(s0 * d);
    let f0_interior = disc * (q * f_u + (1.0 - q) * f_d);
    let f0_at_p = if p == 0.0 {
        disc * f_d
    } else if p == 1.0 {
        disc * f_u
    } else {
        f0_interior
    };
    Ok(DiscontinuityReport {
        f0_interior,
        f0_at_p,
        gap_at_0: disc * q * (f_d - f_u),
        gap_at_1: disc * (1.0 - q) * (f_u - f_d),
    })
}

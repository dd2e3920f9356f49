//! Multi-purpose binomial model parameterization.
//!
//! A step of length `dt` moves the price by a gross factor `u` with
//! probability `p = g + v*sqrt(dt)` and by `d` otherwise. The branch
//! volatilities are `h_u = sigma*sqrt((1-p)/p)` and `h_d = sigma*sqrt(p/(1-p))`,
//! which makes the one-step variance equal `sigma^2*dt` for any `p`.
//!
//! Two factor forms are provided:
//!
//! * exact: `u = exp((gamma - h_u^2/2)dt + h_u sqrt(dt))`, always positive;
//! * asymptotic: `u = 1 + gamma dt + h_u sqrt(dt)`, the first-order expansion.
//!
//! The classical CRR, Jarrow-Rudd and Tian trees are special cases.

use crate::error::{Assumption, Error, Result};

/// Largest moment order accepted by [`step_moment`] and [`gbm_moment`].
pub const MAX_MOMENT_ORDER: u32 = 64;

/// Parameters `(gamma, delta, g, v, sigma)` of the multi-purpose tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Drift of the up branch, per year.
    pub gamma: f64,
    /// Drift of the down branch, per year.
    pub delta: f64,
    /// Base up-probability.
    pub g: f64,
    /// Slope of the up-probability in `sqrt(dt)`, per root-year.
    pub v: f64,
    /// Volatility, per root-year.
    pub sigma: f64,
}

/// One-period gross factors and up probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFactors {
    pub u: f64,
    pub d: f64,
    pub p: f64,
}

/// Which expression of the step factors to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorForm {
    #[default]
    Exact,
    Asymptotic,
}

impl ModelParams {
    pub fn new(gamma: f64, delta: f64, g: f64, v: f64, sigma: f64) -> Self {
        Self {
            gamma,
            delta,
            g,
            v,
            sigma,
        }
    }

    /// Instantaneous mean `b = g*gamma + (1-g)*delta`.
    pub fn drift(&self) -> f64 {
        self.g * self.gamma + (1.0 - self.g) * self.delta
    }

    /// Checks every model assumption for the step `dt`.
    pub fn validate(self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::domain(format!("time step must be positive, got {dt}")));
        }
        if !(self.g > 0.0 && self.g < 1.0) {
            return Err(Error::Assumption(Assumption::BaseProbability));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Assumption(Assumption::Volatility));
        }
        if !self.drift().is_finite() || !self.v.is_finite() {
            return Err(Error::Assumption(Assumption::FiniteDrift));
        }
        let p = self.p_up(dt);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Assumption(Assumption::StepProbability));
        }
        Ok(self)
    }

    /// `g + v*sqrt(dt)`. Unchecked; see [`ModelParams::validate`].
    pub fn p_up(&self, dt: f64) -> f64 {
        self.g + self.v * dt.sqrt()
    }

    /// Branch volatilities `(h_u, h_d)` at probability `p`.
    pub fn branch_vols(&self, p: f64) -> (f64, f64) {
        (
            self.sigma * ((1.0 - p) / p).sqrt(),
            self.sigma * (p / (1.0 - p)).sqrt(),
        )
    }

    pub fn step_factors(&self, dt: f64, form: FactorForm) -> Result<StepFactors> {
        match form {
            FactorForm::Exact => step_factors_exact(self, dt),
            FactorForm::Asymptotic => step_factors_asymptotic(self, dt),
        }
    }
}

pub fn validate_params(params: &ModelParams, dt: f64) -> Result<ModelParams> {
    params.validate(dt)
}

/// Up probability `g + v*sqrt(dt)` after validating the parameters.
pub fn p_up(params: &ModelParams, dt: f64) -> Result<f64> {
    Ok(params.validate(dt)?.p_up(dt))
}

pub fn step_factors_exact(params: &ModelParams, dt: f64) -> Result<StepFactors> {
    let params = params.validate(dt)?;
    let p = params.p_up(dt);
    let (hu, hd) = params.branch_vols(p);
    let sq = dt.sqrt();
    let u = ((params.gamma - 0.5 * hu * hu) * dt + hu * sq).exp();
    let d = ((params.delta - 0.5 * hd * hd) * dt - hd * sq).exp();
    if !(u > d) {
        return Err(Error::Degenerate(format!(
            "branch drifts swamp the volatility: u = {u} is not above d = {d}"
        )));
    }
    Ok(StepFactors { u, d, p })
}

/// First-order factors. Fails when the step is too coarse for `d` to stay positive.
pub fn step_factors_asymptotic(params: &ModelParams, dt: f64) -> Result<StepFactors> {
    let params = params.validate(dt)?;
    let p = params.p_up(dt);
    let (hu, hd) = params.branch_vols(p);
    let sq = dt.sqrt();
    let u = 1.0 + params.gamma * dt + hu * sq;
    let d = 1.0 + params.delta * dt - hd * sq;
    if !(d > 0.0) {
        return Err(Error::domain(format!(
            "asymptotic down factor {d} is not positive; dt = {dt} is too coarse"
        )));
    }
    if !(u > d) {
        return Err(Error::domain(format!("asymptotic factors not ordered: u = {u}, d = {d}")));
    }
    Ok(StepFactors { u, d, p })
}

fn crr_slope(r: f64, sigma: f64) -> f64 {
    (r - 0.5 * sigma * sigma) / (2.0 * sigma)
}

/// Cox-Ross-Rubinstein as a special case: `gamma = delta = r`, `g = 1/2`,
/// `v = (r - sigma^2/2) / (2 sigma)`.
pub fn crr_params(r: f64, sigma: f64) -> ModelParams {
    ModelParams::new(r, r, 0.5, crr_slope(r, sigma), sigma)
}

/// Jarrow-Rudd: `gamma = delta = r`, `g = 1/2`, `v = 0`.
pub fn jarrow_rudd_params(r: f64, sigma: f64) -> ModelParams {
    ModelParams::new(r, r, 0.5, 0.0, sigma)
}

/// Tian's tree as a special case: `gamma = delta = r`, `g = 1/2`,
/// `v = -3 sigma / 4`.
///
/// Tian's up probability expands as `1/2 - (3/4) sigma sqrt(dt) + O(dt^{3/2})`
/// and his up factor as `1 + sigma sqrt(dt) + (r + 3 sigma^2 / 2) dt`; these
/// parameters reproduce both to within `O(dt)` and `O(dt^{3/2})`.
/// See [`tian_params_published`] for the drift-shifted variant.
pub fn tian_params(r: f64, sigma: f64) -> ModelParams {
    ModelParams::new(r, r, 0.5, -0.75 * sigma, sigma)
}

/// The drift-shifted reduction `gamma = delta = r + 3 sigma^2 / 2`, `g = 1/2`,
/// `v = (r - sigma^2/2) / (2 sigma)`.
///
/// Its up probability differs from Tian's at order `sqrt(dt)`, so it does not
/// converge to Tian's tree step by step. Kept for comparison.
pub fn tian_params_published(r: f64, sigma: f64) -> ModelParams {
    let drift = r + 1.5 * sigma * sigma;
    ModelParams::new(drift, drift, 0.5, crr_slope(r, sigma), sigma)
}

/// Classical CRR factors `e^{+-sigma sqrt(dt)}` with the replicating probability.
pub fn crr_factors(r: f64, sigma: f64, dt: f64) -> StepFactors {
    let s = sigma * dt.sqrt();
    let u = s.exp();
    let d = (-s).exp();
    StepFactors {
        u,
        d,
        p: ((r * dt).exp() - d) / (u - d),
    }
}

/// Classical Jarrow-Rudd factors `exp((r - sigma^2/2)dt +- sigma sqrt(dt))`, `p = 1/2`.
pub fn jarrow_rudd_factors(r: f64, sigma: f64, dt: f64) -> StepFactors {
    let m = (r - 0.5 * sigma * sigma) * dt;
    let s = sigma * dt.sqrt();
    StepFactors {
        u: (m + s).exp(),
        d: (m - s).exp(),
        p: 0.5,
    }
}

/// Classical Tian factors, matching the first three moments of the lognormal step.
pub fn tian_factors(r: f64, sigma: f64, dt: f64) -> StepFactors {
    let v = (sigma * sigma * dt).exp();
    let growth = (r * dt).exp();
    let radical = (v * v + 2.0 * v - 3.0).max(0.0).sqrt();
    let u = 0.5 * growth * v * (v + 1.0 + radical);
    let d = 0.5 * growth * v * (v + 1.0 - radical);
    let p = if u > d { (growth - d) / (u - d) } else { 0.5 };
    StepFactors { u, d, p }
}

fn check_order(j: u32) -> Result<()> {
    if j == 0 || j > MAX_MOMENT_ORDER {
        return Err(Error::domain(format!(
            "moment order must be in 1..={MAX_MOMENT_ORDER}, got {j}"
        )));
    }
    Ok(())
}

/// `E[R^j]` of the one-step gross return `R` under the asymptotic factors.
pub fn step_moment(params: &ModelParams, dt: f64, j: u32) -> Result<f64> {
    check_order(j)?;
    let f = step_factors_asymptotic(params, dt)?;
    let j = j as i32;
    Ok(f.p * f.u.powi(j) + (1.0 - f.p) * f.d.powi(j))
}

/// `E[S_dt^j] = exp(j (b + (j-1) sigma^2 / 2) dt)` for the lognormal step.
pub fn gbm_moment(b: f64, sigma: f64, dt: f64, j: u32) -> Result<f64> {
    check_order(j)?;
    if !(dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    let jf = j as f64;
    Ok((jf * (b + 0.5 * (jf - 1.0) * sigma * sigma) * dt).exp())
}

//! Box-constrained Nelder-Mead.
//!
//! Each bounded coordinate is mapped to the real line with a logistic
//! transform (linear or logarithmic in the original scale), so the simplex
//! search is unconstrained and every evaluated point lies inside the box.
//! After the first run the search restarts from the incumbent with a freshly
//! drawn simplex; the draws come from a seeded generator, so results are
//! reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Mapping between a box-constrained coordinate and the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// No constraint.
    Free,
    /// `[lo, hi]`, logistic in the original scale.
    Linear { lo: f64, hi: f64 },
    /// `[lo, hi]` with `lo > 0`, logistic in `ln x`.
    Log { lo: f64, hi: f64 },
}

/// Fraction of the box kept away from an edge when a start sits exactly on it.
const EDGE: f64 = 1e-12;

fn logit(y: f64) -> f64 {
    let y = y.clamp(EDGE, 1.0 - EDGE);
    (y / (1.0 - y)).ln()
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Bound {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Bound::Linear { lo, hi }
    }

    pub fn log(lo: f64, hi: f64) -> Self {
        Bound::Log { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Bound::Free => x.is_finite(),
            Bound::Linear { lo, hi } | Bound::Log { lo, hi } => x >= lo && x <= hi,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Bound::Free => Ok(()),
            Bound::Linear { lo, hi } if lo < hi && lo.is_finite() && hi.is_finite() => Ok(()),
            Bound::Log { lo, hi } if 0.0 < lo && lo < hi && hi.is_finite() => Ok(()),
            other => Err(Error::domain(format!("malformed bound {other:?}"))),
        }
    }

    pub fn to_unbounded(&self, x: f64) -> f64 {
        match *self {
            Bound::Free => x,
            Bound::Linear { lo, hi } => logit((x - lo) / (hi - lo)),
            Bound::Log { lo, hi } => logit((x.ln() - lo.ln()) / (hi.ln() - lo.ln())),
        }
    }

    pub fn to_bounded(&self, z: f64) -> f64 {
        match *self {
            Bound::Free => z,
            Bound::Linear { lo, hi } => (lo + (hi - lo) * logistic(z)).clamp(lo, hi),
            Bound::Log { lo, hi } => (lo.ln() + (hi.ln() - lo.ln()) * logistic(z)).exp().clamp(lo, hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeConfig {
    /// Relative spread of simplex values, as a fraction of the objective at the start.
    pub ftol: f64,
    pub max_evaluations: usize,
    /// Additional runs from the incumbent after the first.
    pub restarts: usize,
    pub seed: u64,
    /// Edge length of the initial simplex in the unbounded coordinates.
    pub initial_step: f64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            ftol: 1e-10,
            max_evaluations: 20_000,
            restarts: 3,
            seed: 7,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Search<'a, F> {
    objective: F,
    bounds: &'a [Bound],
    evaluations: usize,
    max_evaluations: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> f64> Search<'_, F> {
    fn to_bounded(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.bounds).map(|(z, b)| b.to_bounded(*z)).collect()
    }

    fn eval(&mut self, z: &[f64]) -> f64 {
        let x = self.to_bounded(z);
        self.eval_bounded(x)
    }

    fn eval_bounded(&mut self, x: Vec<f64>) -> f64 {
        self.evaluations += 1;
        let f = (self.objective)(&x);
        let f = if f.is_nan() { f64::INFINITY } else { f };
        if f < self.best_f {
            self.best_f = f;
            self.best_x = x;
        }
        f
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.max_evaluations
    }

    /// One Nelder-Mead run from the simplex built on `origin` with `steps`.
    /// Returns whether the tolerance test was met.
    fn run(&mut self, origin: &[f64], steps: &[f64], ftol_abs: f64) -> bool {
        let dim = origin.len();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let f0 = self.eval(origin);
        simplex.push((origin.to_vec(), f0));
        for i in 0..dim {
            let mut z = origin.to_vec();
            z[i] += steps[i];
            let f = self.eval(&z);
            simplex.push((z, f));
        }

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[dim].1 - simplex[0].1;
            if spread.is_finite() && spread <= ftol_abs {
                return true;
            }
            if self.exhausted() {
                return false;
            }

            let centroid: Vec<f64> = (0..dim)
                .map(|k| simplex[..dim].iter().map(|(z, _)| z[k]).sum::<f64>() / dim as f64)
                .collect();
            let worst = simplex[dim].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let reflected = along(1.0);
            let fr = self.eval(&reflected);
            if fr < simplex[0].1 {
                let expanded = along(2.0);
                let fe = self.eval(&expanded);
                simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if fr < worst.1 {
                let z = along(0.5);
                let f = self.eval(&z);
                (z, f)
            } else {
                let z = along(-0.5);
                let f = self.eval(&z);
                (z, f)
            };
            if fc < fr.min(worst.1) {
                simplex[dim] = (contracted, fc);
                continue;
            }
            // shrink toward the best vertex
            let best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let z: Vec<f64> = best
                    .iter()
                    .zip(&vertex.0)
                    .map(|(b, v)| b + 0.5 * (v - b))
                    .collect();
                let f = self.eval(&z);
                *vertex = (z, f);
            }
        }
    }
}

/// Minimizes `objective` over the box `bounds` from `start`.
///
/// The exact `start` vector is evaluated first and kept as the incumbent, so
/// the returned value never exceeds `objective(start)`.
pub fn minimize(
    objective: impl FnMut(&[f64]) -> f64,
    bounds: &[Bound],
    start: &[f64],
    config: &MinimizeConfig,
) -> Result<Minimum> {
    if start.is_empty() || start.len() != bounds.len() {
        return Err(Error::InfeasibleStart(format!(
            "start has {} coordinates for {} bounds",
            start.len(),
            bounds.len()
        )));
    }
    for (i, (x, b)) in start.iter().zip(bounds).enumerate() {
        b.validate()?;
        if !b.contains(*x) {
            return Err(Error::InfeasibleStart(format!(
                "coordinate {i} = {x} outside {b:?}"
            )));
        }
    }

    let mut search = Search {
        objective,
        bounds,
        evaluations: 0,
        max_evaluations: config.max_evaluations.max(start.len() + 2),
        best_x: start.to_vec(),
        best_f: f64::INFINITY,
    };
    let f_start = search.eval_bounded(start.to_vec());
    if !f_start.is_finite() {
        return Err(Error::InfeasibleStart(format!(
            "objective is not finite at the start ({f_start})"
        )));
    }
    let ftol_abs = config.ftol * f_start.abs().max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let origin: Vec<f64> = start
        .iter()
        .zip(bounds)
        .map(|(x, b)| b.to_unbounded(*x))
        .collect();
    let steps = vec![config.initial_step; start.len()];
    let mut converged = search.run(&origin, &steps, ftol_abs);

    for _ in 0..config.restarts {
        if search.exhausted() {
            break;
        }
        let origin: Vec<f64> = search
            .best_x
            .iter()
            .zip(bounds)
            .map(|(x, b)| b.to_unbounded(*x))
            .collect();
        let steps: Vec<f64> = (0..start.len())
            .map(|_| {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                sign * config.initial_step * rng.gen_range(0.2..1.0)
            })
            .collect();
        converged = search.run(&origin, &steps, ftol_abs);
    }

    Ok(Minimum {
        argmin: search.best_x,
        value: search.best_f,
        evaluations: search.evaluations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn quadratic_bowl() {
        let m = minimize(
            |x| (x[0] - 3.0).powi(2),
            &[Bound::Free],
            &[0.0],
            &MinimizeConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(m.argmin[0], 3.0, epsilon = 1e-6);
        assert!(m.converged);
    }

    #[test]
    fn rosenbrock_with_restarts() {
        let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = minimize(
            rosen,
            &[Bound::Free, Bound::Free],
            &[-1.2, 1.0],
            &MinimizeConfig::default(),
        )
        .unwrap();
        assert!(m.value < 1e-8, "value {}", m.value);
        assert_abs_diff_eq!(m.argmin[0], 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(m.argmin[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn bounded_minimum_on_the_edge() {
        let m = minimize(
            |x| (x[0] - 10.0).powi(2) + (x[1] - 0.5).powi(2),
            &[Bound::linear(0.0, 2.0), Bound::log(0.1, 1.0)],
            &[1.0, 0.2],
            &MinimizeConfig::default(),
        )
        .unwrap();
        assert!(m.argmin[0] <= 2.0 && m.argmin[0] > 1.99);
        // value tolerance 1e-10 of f(start) only pins x to about its square root
        assert_abs_diff_eq!(m.argmin[1], 0.5, epsilon = 1e-4);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) * (1.0 + x[1].powi(2)) + (x[1] - 1.7).abs();
        let cfg = MinimizeConfig::default();
        let a = minimize(f, &[Bound::Free, Bound::linear(-5.0, 5.0)], &[2.0, 0.0], &cfg).unwrap();
        let b = minimize(f, &[Bound::Free, Bound::linear(-5.0, 5.0)], &[2.0, 0.0], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn infeasible_start() {
        let cfg = MinimizeConfig::default();
        assert!(matches!(
            minimize(|x| x[0], &[Bound::linear(0.0, 1.0)], &[2.0], &cfg),
            Err(Error::InfeasibleStart(_))
        ));
        assert!(matches!(
            minimize(|_| f64::NAN, &[Bound::Free], &[0.0], &cfg),
            Err(Error::InfeasibleStart(_))
        ));
        assert!(minimize(|x| x[0], &[Bound::Free], &[0.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn never_worse_than_start() {
        // start sits on a bound; the incumbent is the exact start
        let f = |x: &[f64]| (x[0] - 1e-4).abs();
        let m = minimize(f, &[Bound::log(1e-4, 5.0)], &[1e-4], &MinimizeConfig::default()).unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.argmin, vec![1e-4]);
    }

    #[test]
    fn evaluation_budget_is_respected() {
        let cfg = MinimizeConfig {
            max_evaluations: 50,
            ..MinimizeConfig::default()
        };
        let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = minimize(rosen, &[Bound::Free, Bound::Free], &[-1.2, 1.0], &cfg).unwrap();
        assert!(!m.converged);
        assert!(m.evaluations <= 60);
    }

    proptest! {
        #[test]
        fn transforms_round_trip_inside_box(y in 0.001f64..0.999) {
            for b in [Bound::linear(-3.0, 7.0), Bound::log(1e-4, 5.0)] {
                let (lo, hi) = match b {
                    Bound::Linear { lo, hi } => (lo, hi),
                    Bound::Log { lo, hi } => (lo, hi),
                    Bound::Free => unreachable!(),
                };
                let x = lo + (hi - lo) * y;
                let back = b.to_bounded(b.to_unbounded(x));
                prop_assert!((back - x).abs() <= 1e-9 * (1.0 + x.abs()));
                prop_assert!(b.contains(b.to_bounded(1e6)) && b.contains(b.to_bounded(-1e6)));
            }
        }
    }
}

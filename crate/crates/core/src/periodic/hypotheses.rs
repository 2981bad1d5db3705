use serde::Serialize;

use super::{periodic_state, stability_index, OdeSettings, PeriodicFn, Reaction};

/// Sample counts in `t` and `u` for the pointwise checks on `f`.
const T_SAMPLES: usize = 64;
const U_SAMPLES: usize = 64;
/// Upper end of the sampled `u` range.
const U_MAX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Pass/fail record for the standing assumptions on `(beta, mu, f)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const BETA_MEAN_NONNEGATIVE: &str = "mean(beta) >= 0";
pub const MU_POSITIVE: &str = "mu > 0";
pub const LINEARIZATION_POSITIVE: &str = "a(t) = f_u(t,0) > 0";
pub const ZERO_IS_EQUILIBRIUM: &str = "f(t,0) = 0";
pub const PER_CAPITA_DECREASING: &str = "f(t,u)/u strictly decreasing";
pub const NEGATIVE_ABOVE_ONE: &str = "f(t,u) < 0 for u > 1";
pub const STATE_STABLE: &str = "alpha(t) = P f_u(t,P) - f(t,P) < 0";

/// Checks the standing assumptions on a finite sample grid; never fails, only reports.
pub fn validate_hypotheses(beta: &PeriodicFn, mu: &PeriodicFn, f: &Reaction) -> HypothesisReport {
    let period = f.period();
    let times: Vec<f64> = (0..T_SAMPLES).map(|i| i as f64 * period / T_SAMPLES as f64).collect();
    let mut checks = Vec::new();

    let beta_mean = beta.mean();
    checks.push(HypothesisCheck {
        name: BETA_MEAN_NONNEGATIVE,
        passed: beta_mean >= 0.0,
        detail: format!("mean(beta) = {beta_mean}"),
    });

    let mu_min = mu.min();
    checks.push(HypothesisCheck {
        name: MU_POSITIVE,
        passed: mu_min > 0.0,
        detail: format!("min mu = {mu_min}"),
    });

    let a_min = times.iter().map(|&t| f.f_u(t, 0.0)).fold(f64::INFINITY, f64::min);
    checks.push(HypothesisCheck {
        name: LINEARIZATION_POSITIVE,
        passed: a_min > 0.0,
        detail: format!("min a = {a_min}"),
    });

    let f0_max = times.iter().map(|&t| f.f(t, 0.0).abs()).fold(0.0_f64, f64::max);
    checks.push(HypothesisCheck {
        name: ZERO_IS_EQUILIBRIUM,
        passed: f0_max == 0.0,
        detail: format!("max |f(t,0)| = {f0_max}"),
    });

    let mut violation: Option<(f64, f64)> = None;
    'outer: for &t in &times {
        let mut prev = f64::INFINITY;
        for j in 1..=U_SAMPLES {
            let u = U_MAX * j as f64 / U_SAMPLES as f64;
            let per_capita = f.f(t, u) / u;
            if per_capita >= prev {
                violation = Some((t, u));
                break 'outer;
            }
            prev = per_capita;
        }
    }
    checks.push(HypothesisCheck {
        name: PER_CAPITA_DECREASING,
        passed: violation.is_none(),
        detail: match violation {
            Some((t, u)) => format!("f/u not decreasing at t = {t}, u = {u}"),
            None => format!("{T_SAMPLES}x{U_SAMPLES} samples on u in (0, {U_MAX}]"),
        },
    });

    let mut positive_above: Option<(f64, f64)> = None;
    'outer2: for &t in &times {
        for j in 1..=U_SAMPLES {
            let u = 1.0 + (U_MAX - 1.0) * j as f64 / U_SAMPLES as f64;
            if f.f(t, u) >= 0.0 {
                positive_above = Some((t, u));
                break 'outer2;
            }
        }
    }
    checks.push(HypothesisCheck {
        name: NEGATIVE_ABOVE_ONE,
        passed: positive_above.is_none(),
        detail: match positive_above {
            Some((t, u)) => format!("f >= 0 at t = {t}, u = {u}"),
            None => format!("sampled u in (1, {U_MAX}]"),
        },
    });

    let stable = match periodic_state(f, &OdeSettings::default()) {
        Ok(state) => {
            let (alpha, stable) = stability_index(f, &state);
            HypothesisCheck { name: STATE_STABLE, passed: stable, detail: format!("max alpha = {}", alpha.max()) }
        }
        Err(e) => HypothesisCheck { name: STATE_STABLE, passed: false, detail: e.to_string() },
    };
    checks.push(stable);

    HypothesisReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_logistic_passes_everything() {
        let one = PeriodicFn::constant(1.0, 1.0);
        let report = validate_hypotheses(&one, &one, &Reaction::homogeneous_logistic(1.0, 1.0, 1.0));
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn negative_mean_advection_fails_only_that_clause() {
        let beta = PeriodicFn::constant(1.0, -0.5);
        let one = PeriodicFn::constant(1.0, 1.0);
        let report = validate_hypotheses(&beta, &one, &Reaction::homogeneous_logistic(1.0, 1.0, 1.0));
        let failed: Vec<_> = report.failures().map(|c| c.name).collect();
        assert_eq!(failed, vec![BETA_MEAN_NONNEGATIVE]);
    }

    #[test]
    fn cubic_perturbation_breaks_monotone_per_capita_growth() {
        let one = PeriodicFn::constant(1.0, 1.0);
        let f = Reaction::custom(1.0, "cubic", |_, u| u * (1.0 - u) + u * u * u, |_, u| {
            1.0 - 2.0 * u + 3.0 * u * u
        })
        .unwrap();
        let report = validate_hypotheses(&one, &one, &f);
        assert!(!report.get(PER_CAPITA_DECREASING).unwrap().passed);
    }

    #[test]
    fn nonpositive_mu_is_reported() {
        let one = PeriodicFn::constant(1.0, 1.0);
        let mu = PeriodicFn::sin_offset(1.0, 0.5, 1.0, 1, 64).unwrap();
        let report = validate_hypotheses(&one, &mu, &Reaction::homogeneous_logistic(1.0, 1.0, 1.0));
        assert!(!report.get(MU_POSITIVE).unwrap().passed);
    }
}

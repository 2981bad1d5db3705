//! Front speeds and the critical advection quantities.
//!
//! * `r(t; beta)`: fixed point of `r = A[beta - r]` (rightward front);
//! * `l(t; beta)`: fixed point of `l = A[-beta - l]` (leftward front, `mean(beta) < cbar`);
//! * `B(theta)`: root of `y(b) = b - cbar - mean r(.; b + theta)`;
//! * `beta* = A[cbar + omega] + cbar + omega`, the explicit parametrisation of the critical set.
//!
//! `A[k] = mu U_z(t, 0; k)` is evaluated by [`HalfLineSolver`].

use serde::Serialize;

use crate::eigen::{critical_length, EigenSettings};
use crate::periodic::{Environment, PeriodicFn};
use crate::semiwave::{boundary_flux, HalfLineSolver, SemiWaveProfile, SemiWaveSettings};
use crate::{Error, Result};

pub use crate::periodic::cbar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSettings {
    /// Weight of the new iterate in `r <- (1 - w) r + w A[beta - r]`.
    pub damping: f64,
    /// Fixed-point residual `sup |r - A[beta - r]|` accepted.
    pub tol: f64,
    pub max_iterations: usize,
    /// Tolerance in `b` for `B(theta)`.
    pub b_tol: f64,
    /// Margins below this mark a regime decision as low-confidence.
    pub confidence_margin: f64,
    pub semiwave: SemiWaveSettings,
}

impl Default for SpeedSettings {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-5,
            max_iterations: 200,
            b_tol: 1e-3,
            confidence_margin: 1e-2,
            semiwave: SemiWaveSettings::default(),
        }
    }
}

/// A converged front speed together with the wave that carries it.
#[derive(Debug, Clone)]
pub struct SpeedSolution {
    pub speed: PeriodicFn,
    /// Half-line profile `U(t, z; k)` at the converged drift.
    pub profile: SemiWaveProfile,
    pub iterations: usize,
    /// `sup |speed - A[drift(speed)]|`, from a fresh full-accuracy evaluation.
    pub residual: f64,
}

impl SpeedSolution {
    /// `int_0^t speed`.
    pub fn position(&self, t: f64) -> f64 {
        self.speed.cumulative(t)
    }

    pub fn mean(&self) -> f64 {
        self.speed.mean()
    }
}

#[derive(Debug, Clone, Copy)]
enum Direction {
    Right,
    Left,
}

/// Fixed-point iterations sharing one half-line solver, so successive solves (for nearby
/// `beta`) start from the previous wave.
#[derive(Debug, Clone)]
pub struct SpeedSolver<'a> {
    mu: PeriodicFn,
    settings: SpeedSettings,
    half_line: HalfLineSolver<'a>,
    last_right: Option<PeriodicFn>,
    last_left: Option<PeriodicFn>,
}

impl<'a> SpeedSolver<'a> {
    pub fn new(env: &'a Environment, mu: &PeriodicFn, settings: SpeedSettings) -> Result<Self> {
        env.state.same_period(mu)?;
        if mu.min() <= 0.0 {
            return Err(Error::InvalidInput(format!("mu must be positive, min is {}", mu.min())));
        }
        if !(settings.damping > 0.0 && settings.damping <= 1.0) {
            return Err(Error::InvalidInput(format!("damping must be in (0, 1], got {}", settings.damping)));
        }
        Ok(Self {
            mu: mu.clone(),
            settings,
            half_line: HalfLineSolver::new(env, settings.semiwave),
            last_right: None,
            last_left: None,
        })
    }

    pub fn env(&self) -> &'a Environment {
        self.half_line.env()
    }

    pub fn mu(&self) -> &PeriodicFn {
        &self.mu
    }

    pub fn settings(&self) -> &SpeedSettings {
        &self.settings
    }

    /// Relaxation solves performed so far.
    pub fn solves(&self) -> usize {
        self.half_line.solves
    }

    /// `A[k] = mu U_z(t, 0; k)` with the truncation check.
    pub fn flux(&mut self, k: &PeriodicFn) -> Result<(PeriodicFn, SemiWaveProfile)> {
        let (profile, _) = self.half_line.solve_checked(k, self.settings.semiwave.period_tol)?;
        Ok((boundary_flux(&profile, &self.mu)?, profile))
    }

    /// `r(t; beta)`.
    pub fn rightward(&mut self, beta: &PeriodicFn) -> Result<SpeedSolution> {
        if beta.mean() < 0.0 {
            return Err(Error::InvalidInput(format!("mean(beta) = {} must be >= 0", beta.mean())));
        }
        let start = self.last_right.clone();
        let sol = self.iterate(beta, Direction::Right, start)?;
        self.last_right = Some(sol.speed.clone());
        Ok(sol)
    }

    /// `l(t; beta)`; needs `0 <= mean(beta) < cbar`.
    pub fn leftward(&mut self, beta: &PeriodicFn) -> Result<SpeedSolution> {
        let c = self.env().cbar()?;
        let b = beta.mean();
        if b >= c {
            return Err(Error::RegimeError(format!(
                "leftward semi-wave needs mean(beta) < cbar, got {b} >= {c}"
            )));
        }
        if b < 0.0 {
            return Err(Error::InvalidInput(format!("mean(beta) = {b} must be >= 0")));
        }
        let start = self.last_left.clone();
        let sol = self.iterate(beta, Direction::Left, start)?;
        self.last_left = Some(sol.speed.clone());
        Ok(sol)
    }

    fn iterate(&mut self, beta: &PeriodicFn, dir: Direction, start: Option<PeriodicFn>) -> Result<SpeedSolution> {
        beta.same_period(&self.mu)?;
        let s = self.settings;
        let full = s.semiwave.period_tol;
        let drift = |r: &PeriodicFn| match dir {
            Direction::Right => beta.zip_with(r, |b, v| b - v),
            Direction::Left => beta.zip_with(r, |b, v| -b - v),
        };
        let mut r = start
            .unwrap_or_else(|| PeriodicFn::constant_with_nodes(beta.period(), 0.0, s.semiwave.flux_samples));
        let mut residual = f64::INFINITY;
        let mut exact = false;
        for iteration in 1..=s.max_iterations {
            let k = drift(&r)?;
            let (profile, flux) = if exact {
                let (profile, _) = self.half_line.solve_checked(&k, full)?;
                let flux = boundary_flux(&profile, &self.mu)?;
                (profile, flux)
            } else {
                // Early iterates only need the flux to a fraction of the current residual.
                let tol = (1e-3 * residual).clamp(full, 1e-4);
                let profile = self.half_line.solve(&k, tol)?;
                let flux = boundary_flux(&profile, &self.mu)?;
                (profile, flux)
            };
            residual = flux.sup_distance(&r)?;
            if residual < s.tol {
                if exact {
                    return Ok(SpeedSolution { speed: r, profile, iterations: iteration, residual });
                }
                // Confirm with a full-accuracy, truncation-checked evaluation.
                exact = true;
                continue;
            }
            r = r.zip_with(&flux, |old, new| (1.0 - s.damping) * old + s.damping * new)?;
        }
        Err(Error::NoConvergence { what: "semi-wave speed fixed point", iterations: s.max_iterations, last_change: residual })
    }
}

/// `r(t; beta)`, the unique periodic speed with `r = A[beta - r]`.
pub fn rightward_speed(
    beta: &PeriodicFn,
    mu: &PeriodicFn,
    env: &Environment,
    settings: &SpeedSettings,
) -> Result<SpeedSolution> {
    SpeedSolver::new(env, mu, *settings)?.rightward(beta)
}

/// `l(t; beta)`, the unique periodic speed with `l = A[-beta - l]`.
pub fn leftward_speed(
    beta: &PeriodicFn,
    mu: &PeriodicFn,
    env: &Environment,
    settings: &SpeedSettings,
) -> Result<SpeedSolution> {
    SpeedSolver::new(env, mu, *settings)?.leftward(beta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalAverage {
    /// `B(theta)`.
    pub value: f64,
    /// Final bracket `[lo, hi]` with `y(lo) < 0 < y(hi)`.
    pub bracket: (f64, f64),
    /// Every `(b, y(b))` evaluated, in order.
    pub samples: Vec<(f64, f64)>,
}

/// `y(b) = b - cbar - mean r(.; b + theta)`.
pub fn y_value(solver: &mut SpeedSolver<'_>, theta: &PeriodicFn, b: f64) -> Result<f64> {
    let c = solver.env().cbar()?;
    let r = solver.rightward(&theta.offset(b))?;
    Ok(b - c - r.mean())
}

fn check_zero_mean(p: &PeriodicFn, name: &str) -> Result<()> {
    let m = p.mean();
    if m.abs() > 1e-9 * (1.0 + p.sup_norm()) {
        return Err(Error::InvalidInput(format!("{name} must have zero mean, got {m}")));
    }
    Ok(())
}

/// `B(theta)` for a zero-mean shape `theta`.
///
/// The bracket starts at `[cbar, 2 cbar]` and its upper end is doubled until `y > 0`. It
/// is then narrowed by regula falsi with the Illinois modification; the iteration stops
/// when the bracket is narrower than `b_tol` or the secant error estimate is below
/// `b_tol / 20`.
pub fn critical_average(
    theta: &PeriodicFn,
    mu: &PeriodicFn,
    env: &Environment,
    settings: &SpeedSettings,
) -> Result<CriticalAverage> {
    let mut solver = SpeedSolver::new(env, mu, *settings)?;
    critical_average_with(&mut solver, theta)
}

pub fn critical_average_with(solver: &mut SpeedSolver<'_>, theta: &PeriodicFn) -> Result<CriticalAverage> {
    check_zero_mean(theta, "theta")?;
    let c = solver.env().cbar()?;
    let tol = solver.settings().b_tol;
    let mut samples = Vec::new();
    let mut eval = |solver: &mut SpeedSolver<'_>, b: f64| -> Result<f64> {
        let y = y_value(solver, theta, b)?;
        samples.push((b, y));
        Ok(y)
    };

    let (mut lo, mut y_lo) = (c, eval(solver, c)?);
    let (mut hi, mut y_hi);
    let mut grow = 0;
    loop {
        hi = 2.0 * lo.max(c);
        y_hi = eval(solver, hi)?;
        if y_hi > 0.0 {
            break;
        }
        (lo, y_lo) = (hi, y_hi);
        grow += 1;
        if grow > 20 {
            return Err(Error::BracketFailure(format!("y(b) <= 0 up to b = {hi}")));
        }
    }
    if y_lo >= 0.0 {
        return Err(Error::BracketFailure(format!("y(cbar) = {y_lo} is not negative")));
    }

    let mut side = 0i8;
    let (mut f_lo, mut f_hi) = (y_lo, y_hi);
    for _ in 0..100 {
        if hi - lo < tol {
            break;
        }
        let b = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let b = if b > lo && b < hi { b } else { 0.5 * (lo + hi) };
        let y = eval(solver, b)?;
        let slope = (y_hi - y_lo) / (hi - lo);
        if y < 0.0 {
            (lo, y_lo, f_lo) = (b, y, y);
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            (hi, y_hi, f_hi) = (b, y, y);
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        if y.abs() < 0.05 * tol * slope {
            return Ok(CriticalAverage { value: b, bracket: (lo, hi), samples });
        }
    }
    let value = (lo * y_hi - hi * y_lo) / (y_hi - y_lo);
    Ok(CriticalAverage { value, bracket: (lo, hi), samples })
}

/// `beta* = A[cbar + omega] + cbar + omega` for a zero-mean `omega`.
pub fn beta_star_from_shape(
    omega: &PeriodicFn,
    mu: &PeriodicFn,
    env: &Environment,
    settings: &SpeedSettings,
) -> Result<PeriodicFn> {
    let mut solver = SpeedSolver::new(env, mu, *settings)?;
    beta_star_with(&mut solver, omega)
}

pub fn beta_star_with(solver: &mut SpeedSolver<'_>, omega: &PeriodicFn) -> Result<PeriodicFn> {
    check_zero_mean(omega, "omega")?;
    let c = solver.env().cbar()?;
    let k = omega.offset(c);
    let (flux, _) = solver.flux(&k)?;
    Ok(&flux + &k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `mean(beta) < cbar`.
    Small,
    /// `cbar <= mean(beta) < B(shape(beta))`.
    Medium,
    /// `mean(beta) >= B(shape(beta))`.
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub beta_mean: f64,
    pub cbar: f64,
    /// `B(shape(beta))`; only computed when `mean(beta) >= cbar`.
    pub b_theta: Option<f64>,
    /// Distance of `mean(beta)` to the nearest computed regime boundary.
    pub margin: f64,
    pub low_confidence: bool,
}

pub fn advection_regime(
    beta: &PeriodicFn,
    mu: &PeriodicFn,
    env: &Environment,
    settings: &SpeedSettings,
) -> Result<RegimeReport> {
    let mut solver = SpeedSolver::new(env, mu, *settings)?;
    advection_regime_with(&mut solver, beta)
}

pub fn advection_regime_with(solver: &mut SpeedSolver<'_>, beta: &PeriodicFn) -> Result<RegimeReport> {
    let c = solver.env().cbar()?;
    let (b, shape) = beta.mean_and_shape();
    if b < 0.0 {
        return Err(Error::InvalidInput(format!("mean(beta) = {b} must be >= 0; reflect x first")));
    }
    let confidence = solver.settings().confidence_margin;
    if b < c {
        let margin = c - b;
        return Ok(RegimeReport {
            regime: Regime::Small,
            beta_mean: b,
            cbar: c,
            b_theta: None,
            margin,
            low_confidence: margin < confidence,
        });
    }
    let big_b = critical_average_with(solver, &shape)?.value;
    let regime = if b < big_b { Regime::Medium } else { Regime::Large };
    let margin = (b - c).abs().min((b - big_b).abs());
    Ok(RegimeReport {
        regime,
        beta_mean: b,
        cbar: c,
        b_theta: Some(big_b),
        margin,
        low_confidence: margin < confidence,
    })
}

/// Everything the classifier needs to know about the fronts for one `(beta, mu, f)`.
#[derive(Debug, Clone)]
pub struct CriticalSpeeds {
    pub cbar: f64,
    pub beta_mean: f64,
    pub right: SpeedSolution,
    /// Only when `mean(beta) < cbar`.
    pub left: Option<SpeedSolution>,
    pub regime: RegimeReport,
    /// `l*(-beta, a)`, only when `mean(beta) < cbar`.
    pub ell_star: Option<f64>,
}

impl CriticalSpeeds {
    pub fn compute(beta: &PeriodicFn, mu: &PeriodicFn, env: &Environment, settings: &SpeedSettings) -> Result<Self> {
        let mut solver = SpeedSolver::new(env, mu, *settings)?;
        let regime = advection_regime_with(&mut solver, beta)?;
        let right = solver.rightward(beta)?;
        let (left, ell_star) = if regime.regime == Regime::Small {
            let left = solver.leftward(beta)?;
            let ell = critical_length(&(-beta), &env.linearization, 1e-7, &EigenSettings::default())?;
            (Some(left), Some(ell))
        } else {
            (None, None)
        };
        Ok(Self { cbar: regime.cbar, beta_mean: regime.beta_mean, right, left, regime, ell_star })
    }

    /// `R(t) = int_0^t r`.
    pub fn right_position(&self, t: f64) -> f64 {
        self.right.position(t)
    }

    /// `L(t) = int_0^t l`.
    pub fn left_position(&self, t: f64) -> Option<f64> {
        self.left.as_ref().map(|l| l.position(t))
    }

    pub fn mean_r(&self) -> f64 {
        self.right.mean()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::Reaction;

    fn logistic() -> Environment {
        Environment::new(Reaction::homogeneous_logistic(1.0, 1.0, 1.0)).unwrap()
    }

    fn constant(v: f64) -> PeriodicFn {
        PeriodicFn::constant(1.0, v)
    }

    fn coarse() -> SpeedSettings {
        SpeedSettings {
            semiwave: SemiWaveSettings {
                nodes_per_unit: 64,
                steps_per_period: 128,
                flux_samples: 64,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    /// `q'(0)` for `q'' + k q' + q(1 - q) = 0`, `q(0) = 0`, `q(inf) = 1`: the trajectory
    /// `p(q)` leaving the saddle `(1, 0)` along its stable direction, integrated to `q = 0`.
    fn phase_plane_slope(k: f64) -> f64 {
        let m = 0.5 * (-k - (k * k + 4.0).sqrt());
        let delta = 1e-7;
        let n = 20000;
        let mut q = 1.0 - delta;
        let mut p = -m * delta;
        let h = -q / n as f64;
        let rhs = |q: f64, p: f64| -k - q * (1.0 - q) / p;
        for _ in 0..n {
            let k1 = rhs(q, p);
            let k2 = rhs(q + 0.5 * h, p + 0.5 * h * k1);
            let k3 = rhs(q + 0.5 * h, p + 0.5 * h * k2);
            let k4 = rhs(q + h, p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            q += h;
        }
        p
    }

    /// Root of `c = q'(0; beta - c)` by bisection.
    fn speed_oracle(beta: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, beta + 2.0);
        for _ in 0..60 {
            let c = 0.5 * (lo + hi);
            if c < phase_plane_slope(beta - c) {
                lo = c;
            } else {
                hi = c;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn oracle_reproduces_first_integral() {
        assert!((phase_plane_slope(0.0) - 1.0 / 3f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn rightward_speed_matches_phase_plane() {
        let env = logistic();
        for beta in [0.0, 1.0] {
            let r = rightward_speed(&constant(beta), &constant(1.0), &env, &SpeedSettings::default()).unwrap();
            let target = speed_oracle(beta);
            assert!((r.speed.max() - target).abs() < 1e-4 && (r.speed.min() - target).abs() < 1e-4, "beta={beta}");
            assert!(r.residual < 1e-5);
        }
    }

    #[test]
    fn leftward_equals_rightward_without_advection() {
        let env = logistic();
        let mut solver = SpeedSolver::new(&env, &constant(1.0), coarse()).unwrap();
        let r = solver.rightward(&constant(0.0)).unwrap();
        let l = solver.leftward(&constant(0.0)).unwrap();
        assert!(r.speed.sup_distance(&l.speed).unwrap() < 1e-4);
    }

    #[test]
    fn leftward_speed_bounds_and_regime_error() {
        let env = logistic();
        let mut solver = SpeedSolver::new(&env, &constant(1.0), coarse()).unwrap();
        let l = solver.leftward(&constant(1.0)).unwrap();
        assert!(l.mean() > 0.0 && l.mean() < 1.0);
        assert!(matches!(solver.leftward(&constant(2.5)), Err(Error::RegimeError(_))));
    }

    #[test]
    fn speeds_increase_with_advection() {
        let env = logistic();
        let mut solver = SpeedSolver::new(&env, &constant(1.0), coarse()).unwrap();
        let theta = PeriodicFn::sin_offset(1.0, 0.0, 0.3, 1, 64).unwrap();
        let mut previous: Option<PeriodicFn> = None;
        for b in [0.5, 1.0, 2.0] {
            let r = solver.rightward(&theta.offset(b)).unwrap();
            assert!(r.speed.min() > 0.0 && r.mean() < b + 2.0);
            if let Some(p) = previous {
                assert!(r.speed.zip_with(&p, |x, y| x - y).unwrap().min() > 1e-5);
            }
            previous = Some(r.speed);
        }
    }

    #[test]
    fn critical_average_homogeneous() {
        let env = logistic();
        let big_b = critical_average(&constant(0.0), &constant(1.0), &env, &SpeedSettings::default()).unwrap();
        // B(0) solves b - 2 = c(b); at that b the drift b - c(b) equals cbar, so
        // B(0) = cbar + q'(0; cbar).
        let oracle = 2.0 + phase_plane_slope(2.0);
        assert!((big_b.value - oracle).abs() < 1e-3, "{} vs {oracle}", big_b.value);
        assert!(big_b.value > 2.0);
    }

    #[test]
    fn y_changes_sign_around_critical_average() {
        let env = logistic();
        let theta = PeriodicFn::sin_offset(1.0, 0.0, 0.3, 1, 64).unwrap();
        let mut solver = SpeedSolver::new(&env, &constant(1.0), coarse()).unwrap();
        let big_b = critical_average_with(&mut solver, &theta).unwrap().value;
        assert!(big_b > 2.0);
        assert!(y_value(&mut solver, &theta, big_b - 0.2).unwrap() < 0.0);
        assert!(y_value(&mut solver, &theta, big_b + 0.2).unwrap() > 0.0);
    }

    #[test]
    fn beta_star_constant_shape() {
        let env = logistic();
        let beta = beta_star_from_shape(&constant(0.0), &constant(1.0), &env, &SpeedSettings::default()).unwrap();
        let oracle = 2.0 + phase_plane_slope(2.0);
        assert!((beta.mean() - oracle).abs() < 1e-3);
        assert!(beta.shape().sup_norm() < 1e-9);
    }

    #[test]
    fn regime_classification() {
        let env = logistic();
        let s = coarse();
        let small = advection_regime(&constant(1.0), &constant(1.0), &env, &s).unwrap();
        assert_eq!(small.regime, Regime::Small);
        let medium = advection_regime(&constant(2.1), &constant(1.0), &env, &s).unwrap();
        assert_eq!(medium.regime, Regime::Medium);
        let b0 = medium.b_theta.unwrap();
        let large = advection_regime(&constant(b0 + 1.0), &constant(1.0), &env, &s).unwrap();
        assert_eq!(large.regime, Regime::Large);
        let edge = advection_regime(&constant(1.995), &constant(1.0), &env, &s).unwrap();
        assert!(edge.low_confidence);
    }

    #[test]
    fn zero_mean_required() {
        let env = logistic();
        assert!(critical_average(&constant(0.5), &constant(1.0), &env, &coarse()).is_err());
        assert!(beta_star_from_shape(&constant(0.5), &constant(1.0), &env, &coarse()).is_err());
    }

    #[test]
    fn critical_set_depends_on_mu() {
        // A drift shape paired with a diffusivity concentrated where the resulting flux
        // is largest: the average of beta* moves away from its omega = 0 value.
        let env = logistic();
        let s = coarse();
        let omega = PeriodicFn::sin_offset(1.0, 0.0, 1.5, 1, 64).unwrap();
        let base = beta_star_from_shape(&constant(0.0), &constant(1.0), &env, &s).unwrap();
        let profile_flux = &beta_star_from_shape(&omega, &constant(1.0), &env, &s).unwrap() - &omega.offset(2.0);
        let peak = profile_flux.times().zip(profile_flux.values()).fold((0.0, f64::MIN), |acc, (t, &v)| {
            if v > acc.1 { (t, v) } else { acc }
        }).0;
        let mu = PeriodicFn::from_fn(1.0, 64, |t| {
            let d = ((t - peak).rem_euclid(1.0) - 0.5).abs() * 2.0;
            0.2 + 1.8 / (1.0 + (-(d - 0.5) * 20.0).exp())
        })
        .unwrap();
        let with_mu = beta_star_from_shape(&omega, &mu, &env, &s).unwrap();
        let base_mu = beta_star_from_shape(&constant(0.0), &mu, &env, &s).unwrap();
        let gap = (with_mu.mean() - base_mu.mean()).abs();
        assert!(gap > 1e-2, "gap {gap}, base {}", base.mean());
    }
}

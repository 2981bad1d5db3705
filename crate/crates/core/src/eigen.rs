//! Principal eigenvalue of the T-periodic Dirichlet problem
//!
//! ```text
//! phi_t - phi_zz - k(t) phi_z - a(t) phi = lambda phi,   0 < z < l,
//! phi(t, 0) = phi(t, l) = 0,  phi(0, .) = phi(T, .)
//! ```
//!
//! computed from the dominant Floquet multiplier `rho` of the period map of
//! `psi_t = psi_zz + k psi_z + a psi` as `lambda = -ln(rho) / T`.

use std::f64::consts::PI;

use crate::field::SpaceTimeField;
use crate::linalg::Tridiagonal;
use crate::periodic::{cbar, PeriodicFn};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSettings {
    /// Spatial intervals on `[0, l]`.
    pub nodes: usize,
    pub steps_per_period: usize,
    /// Stop when successive multiplier estimates differ by less than this (relative).
    pub tol: f64,
    pub max_periods: usize,
    /// Combine the grid with its uniform refinement to cancel the second-order error.
    pub extrapolate: bool,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self { nodes: 512, steps_per_period: 512, tol: 1e-10, max_periods: 500, extrapolate: true }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Principal eigenfunction over one period, sup-normalised to 1.
    pub eigenfunction: SpaceTimeField,
    pub length: f64,
    pub converged: bool,
    /// Power-iteration periods used (finest grid).
    pub iterations: usize,
}

struct PeriodMap<'a> {
    k: &'a PeriodicFn,
    a: &'a PeriodicFn,
    n: usize,
    steps: usize,
    /// Trailing steps of each period taken as two backward-Euler half steps.
    damped: usize,
    h: f64,
    dt: f64,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    solver: Tridiagonal,
}

impl<'a> PeriodMap<'a> {
    fn new(k: &'a PeriodicFn, a: &'a PeriodicFn, length: f64, n: usize, steps: usize, damped: usize) -> Self {
        let m = n - 1;
        Self {
            k,
            a,
            n,
            steps,
            damped: damped.clamp(1, steps),
            h: length / n as f64,
            dt: k.period() / steps as f64,
            sub: vec![0.0; m],
            diag: vec![0.0; m],
            sup: vec![0.0; m],
            rhs: vec![0.0; m],
            solver: Tridiagonal::new(),
        }
    }

    /// Advances `psi` (including the zero boundary entries) over one period.
    ///
    /// The last `damped` steps of each period are split into two backward-Euler half
    /// steps; plain Crank-Nicolson barely damps the stiffest modes, which would otherwise
    /// beat the principal multiplier when the principal mode itself decays fast. Damping
    /// at the end also removes the round-off fed into those modes during the period.
    fn apply(&mut self, psi: &mut [f64], mut record: Option<&mut Vec<Vec<f64>>>, stride: usize) {
        let dt = self.dt;
        for s in 0..self.steps {
            if let Some(rec) = record.as_deref_mut() {
                if s % stride == 0 {
                    rec.push(psi.to_vec());
                }
            }
            let t = s as f64 * dt;
            if s + self.damped >= self.steps {
                self.step(psi, t, 0.5 * dt, 1.0);
                self.step(psi, t + 0.5 * dt, 0.5 * dt, 1.0);
            } else {
                self.step(psi, t, dt, 0.5);
            }
        }
        if let Some(rec) = record {
            rec.push(psi.to_vec());
        }
    }

    /// One theta-scheme step for the `k` part followed by the exact factor for `a`.
    fn step(&mut self, psi: &mut [f64], t: f64, dt: f64, theta: f64) {
        let h = self.h;
        let inv_h2 = 1.0 / (h * h);
        let kk = self.k.eval(t + 0.5 * dt);
        let lower = inv_h2 - 0.5 * kk / h;
        let upper = inv_h2 + 0.5 * kk / h;
        let explicit = (1.0 - theta) * dt;
        for j in 1..self.n {
            let lap = lower * psi[j - 1] - 2.0 * inv_h2 * psi[j] + upper * psi[j + 1];
            self.rhs[j - 1] = psi[j] + explicit * lap;
            self.sub[j - 1] = -theta * dt * lower;
            self.diag[j - 1] = 1.0 + 2.0 * theta * dt * inv_h2;
            self.sup[j - 1] = -theta * dt * upper;
        }
        self.solver.solve(&self.sub, &self.diag, &self.sup, &mut self.rhs);
        // a(t) only depends on t, so its contribution is an exact scalar factor.
        let gain = (self.a.cumulative(t + dt) - self.a.cumulative(t)).exp();
        for j in 1..self.n {
            psi[j] = gain * self.rhs[j - 1];
        }
    }
}

struct PowerOutcome {
    lambda: f64,
    levels: Vec<Vec<f64>>,
    iterations: usize,
    converged: bool,
}

#[allow(clippy::too_many_arguments)]
fn power_iteration(
    k: &PeriodicFn,
    a: &PeriodicFn,
    length: f64,
    n: usize,
    steps: usize,
    record_stride: usize,
    damped: usize,
    settings: &EigenSettings,
) -> PowerOutcome {
    let period = k.period();
    let kbar = k.mean();
    let h = length / n as f64;
    let mut psi: Vec<f64> = (0..=n)
        .map(|j| {
            let z = j as f64 * h;
            (-0.5 * kbar * z).exp() * (PI * z / length).sin()
        })
        .collect();
    psi[0] = 0.0;
    psi[n] = 0.0;
    normalize_sup(&mut psi);

    let mut map = PeriodMap::new(k, a, length, n, steps, damped);
    let mut rho_prev = f64::NAN;
    let mut rho = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;
    let mut next = psi.clone();
    while iterations < settings.max_periods {
        iterations += 1;
        next.copy_from_slice(&psi);
        map.apply(&mut next, None, 1);
        let num: f64 = psi.iter().zip(&next).map(|(p, q)| p * q).sum();
        let den: f64 = psi.iter().map(|p| p * p).sum();
        rho = num / den;
        std::mem::swap(&mut psi, &mut next);
        normalize_sup(&mut psi);
        if !(rho > 0.0) {
            // A spurious mode won; the caller retries with more damping.
            break;
        }
        if (rho - rho_prev).abs() < settings.tol * rho.abs() {
            converged = true;
            break;
        }
        rho_prev = rho;
    }

    let mut levels = Vec::with_capacity(steps / record_stride + 1);
    map.apply(&mut psi, Some(&mut levels), record_stride);
    let lambda = -rho.ln() / period;
    // psi(t) e^{lambda t} is the periodic eigenfunction.
    let last = levels.len() - 1;
    for (j, level) in levels.iter_mut().enumerate() {
        let growth = (lambda * period * j as f64 / last as f64).exp();
        level.iter_mut().for_each(|v| *v *= growth);
    }
    PowerOutcome { lambda, levels, iterations, converged }
}

/// Per-period log-separation demanded between the principal mode and every other mode.
const MODE_SEPARATION: f64 = 3.0;

/// Number of damped steps per period, with `k` frozen at its mean, such that
///
/// * every poorly resolved mode (symbol `dt mu_j >= 1`) decays over a period faster than
///   mode 1 by at least `MODE_SEPARATION` in the exponent (resolved modes keep their
///   physical separation, which no amount of damping changes), and
/// * modes on which Crank-Nicolson does not contract (symbol `dt mu_j >= 2`) are damped
///   by the backward-Euler steps alone that much faster than mode 1 decays over the whole
///   period: a time-dependent `k` feeds them from mode 1 throughout the period.
fn damped_steps(kbar: f64, length: f64, n: usize, steps: usize, period: f64) -> usize {
    let h = length / n as f64;
    let dt = period / steps as f64;
    let (lower, upper) = (1.0 / (h * h) - 0.5 * kbar / h, 1.0 / (h * h) + 0.5 * kbar / h);
    let coupling = (lower * upper).abs().sqrt();
    let symbol = |j: usize| dt * (2.0 / (h * h) - 2.0 * coupling * (PI * j as f64 / n as f64).cos());
    let be = |x: f64| 2.0 * (1.0 + 0.5 * x).ln();
    let cn = |x: f64| -((1.0 - 0.5 * x).abs() / (1.0 + 0.5 * x)).max(1e-300).ln();
    let decay = |x: f64, d: usize| d as f64 * be(x) + (steps - d) as f64 * cn(x);
    let x1 = symbol(1);
    (1..=steps)
        .find(|&d| {
            let principal = decay(x1, d);
            (2..n).all(|j| {
                let x = symbol(j);
                let total = x < 1.0 || decay(x, d) - principal >= MODE_SEPARATION;
                total && (x < 2.0 || d as f64 * be(x) - principal >= MODE_SEPARATION)
            })
        })
        .unwrap_or(steps)
}

fn normalize_sup(v: &mut [f64]) {
    let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
}

/// Principal eigenvalue `lambda_1(l)` and eigenfunction by Floquet power iteration.
pub fn principal_eigenvalue(
    k: &PeriodicFn,
    a: &PeriodicFn,
    length: f64,
    settings: &EigenSettings,
) -> Result<EigenResult> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidInput(format!("interval length must be positive, got {length}")));
    }
    k.same_period(a)?;
    if settings.nodes < 4 || settings.steps_per_period < 1 {
        return Err(Error::InvalidInput("eigen grid too coarse".into()));
    }
    let (n, m) = (settings.nodes, settings.steps_per_period);

    // Both Richardson levels use the same number of damped steps so that the
    // backward-Euler error, O(damped dt^2), still cancels.
    let mut damped = damped_steps(k.mean(), length, n, m, k.period());
    if settings.extrapolate {
        damped = damped.max(damped_steps(k.mean(), length, 2 * n, 2 * m, k.period()));
    }
    let most = if settings.extrapolate { 2 * m } else { m };
    let (lambda1, outcome) = loop {
        let attempt = if settings.extrapolate {
            let coarse = power_iteration(k, a, length, n, m, m, damped, settings);
            let fine = power_iteration(k, a, length, 2 * n, 2 * m, 2, damped, settings);
            let iterations = coarse.iterations.max(fine.iterations);
            let ok = coarse.converged && fine.converged;
            (ok, iterations, (4.0 * fine.lambda - coarse.lambda) / 3.0, fine)
        } else {
            let single = power_iteration(k, a, length, n, m, 1, damped, settings);
            (single.converged, single.iterations, single.lambda, single)
        };
        match attempt {
            (true, _, lambda, outcome) => break (lambda, outcome),
            (false, iterations, ..) if damped >= most => {
                return Err(Error::NoConvergence { what: "Floquet power iteration", iterations, last_change: f64::NAN });
            }
            _ => damped = (2 * damped).min(most),
        }
    };

    let mut eigenfunction = SpaceTimeField::new(k.period(), length, outcome.levels);
    let sup = eigenfunction.sup();
    eigenfunction.scale(1.0 / sup);
    Ok(EigenResult {
        lambda1,
        eigenfunction,
        length,
        converged: outcome.converged,
        iterations: outcome.iterations,
    })
}

/// Largest length considered before giving up on bracketing `l*`.
const MAX_LENGTH: f64 = 1e4;

/// The length `l*(k, a)` where `lambda_1` changes sign (positive below, negative above).
///
/// The bracket is grown geometrically (factor 2) from `l = 1`; it is then narrowed with a
/// sign-preserving regula falsi (Illinois variant) until `|lambda_1(l*)| <= tol`.
pub fn critical_length(k: &PeriodicFn, a: &PeriodicFn, tol: f64, settings: &EigenSettings) -> Result<f64> {
    let kbar = k.mean();
    let c = cbar(a)?;
    if kbar.abs() >= c {
        return Err(Error::NoCriticalLength { kbar, cbar: c });
    }
    let lambda = |l: f64| principal_eigenvalue(k, a, l, settings).map(|r| r.lambda1);

    let mut l = 1.0;
    let mut val = lambda(l)?;
    if val.abs() <= tol {
        return Ok(l);
    }
    let (mut lo, mut f_lo, mut hi, mut f_hi);
    if val > 0.0 {
        (lo, f_lo) = (l, val);
        loop {
            l *= 2.0;
            if l > MAX_LENGTH {
                return Err(Error::BracketFailure(format!("lambda_1 still positive at l = {}", l / 2.0)));
            }
            val = lambda(l)?;
            if val <= 0.0 {
                (hi, f_hi) = (l, val);
                break;
            }
            (lo, f_lo) = (l, val);
        }
    } else {
        (hi, f_hi) = (l, val);
        loop {
            l *= 0.5;
            if l < 1.0 / MAX_LENGTH {
                return Err(Error::BracketFailure(format!("lambda_1 still negative at l = {}", 2.0 * l)));
            }
            val = lambda(l)?;
            if val >= 0.0 {
                (lo, f_lo) = (l, val);
                break;
            }
            (hi, f_hi) = (l, val);
        }
    }
    if f_hi.abs() <= tol {
        return Ok(hi);
    }
    if f_lo.abs() <= tol {
        return Ok(lo);
    }

    let mut side = 0i8;
    for _ in 0..200 {
        let guess = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let guess = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
        let val = lambda(guess)?;
        if val.abs() <= tol || hi - lo < 1e-13 * hi {
            return Ok(guess);
        }
        if val > 0.0 {
            lo = guess;
            f_lo = val;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = guess;
            f_hi = val;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NoConvergence { what: "critical length bracketing", iterations: 200, last_change: hi - lo })
}

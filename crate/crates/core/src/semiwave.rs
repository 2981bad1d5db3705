//! Periodic boundary-value problems for `v_t = v_zz + k(t) v_z + f(t, v)`, `v(t, 0) = 0`:
//!
//! * [`relax_dirichlet_zero`]: `v(t, l) = 0` on a finite interval (profile `U0`);
//! * [`relax_dirichlet_pinned`]: `v(t, l) = P0 = max P`, maximal solution (`U1`);
//! * [`half_line_profile`]: `v -> P(t)` as `z -> infinity` (`U`), truncated at a radius
//!   that is doubled until the boundary flux no longer moves.
//!
//! All three are found by marching the parabolic problem in time until it repeats
//! itself over one period.

use serde::Serialize;

use crate::field::{left_slope, SpaceTimeField};
use crate::linalg::Tridiagonal;
use crate::periodic::{Environment, PeriodicFn};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    /// Zero at both ends.
    DirichletZero,
    /// Zero at `z = 0`, pinned to `max P` at `z = l`.
    DirichletPinned,
    /// Zero at `z = 0`, converging to `P(t)` far away.
    HalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiWaveSettings {
    pub nodes_per_unit: usize,
    /// Must be a multiple of `stored_levels` and `flux_samples`.
    pub steps_per_period: usize,
    /// Stop once `sup |v(T) - v(0)|` over a period, and the distance to the limit
    /// extrapolated from the contraction rate, drop below this.
    pub period_tol: f64,
    pub max_periods: usize,
    /// A limit with `sup v` below this is declared the zero solution.
    pub trivial_threshold: f64,
    /// Time intervals kept for the returned space-time field.
    pub stored_levels: usize,
    /// Samples per period of the boundary slope.
    pub flux_samples: usize,
    /// Half line: accepted change of the boundary flux when the radius is doubled.
    pub truncation_tol: f64,
    /// Half line: smallest truncation radius tried.
    pub min_radius: f64,
    pub max_doublings: usize,
}

impl Default for SemiWaveSettings {
    fn default() -> Self {
        Self {
            nodes_per_unit: 256,
            steps_per_period: 512,
            period_tol: 1e-8,
            max_periods: 2000,
            trivial_threshold: 1e-6,
            stored_levels: 64,
            flux_samples: 256,
            truncation_tol: 1e-6,
            min_radius: 16.0,
            max_doublings: 4,
        }
    }
}

impl SemiWaveSettings {
    fn validate(&self) -> Result<()> {
        let steps = self.steps_per_period;
        if self.nodes_per_unit < 4
            || self.stored_levels == 0
            || self.flux_samples < crate::periodic::MIN_NODES
            || steps % self.stored_levels != 0
            || steps % self.flux_samples != 0
        {
            return Err(Error::InvalidInput(format!(
                "semi-wave grid: steps/period {steps} must be a multiple of stored levels {} and \
                 flux samples {} (>= {})",
                self.stored_levels,
                self.flux_samples,
                crate::periodic::MIN_NODES
            )));
        }
        if !(self.period_tol > 0.0 && self.trivial_threshold > 0.0 && self.truncation_tol > 0.0) {
            return Err(Error::InvalidInput("semi-wave tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// A converged periodic solution on `[0, T] x [0, Z]`.
#[derive(Debug, Clone)]
pub struct SemiWaveProfile {
    pub kind: ProfileKind,
    pub field: SpaceTimeField,
    pub drift: PeriodicFn,
    /// `l` for the Dirichlet problems, the truncation radius for the half line.
    pub length: f64,
    /// `v_z(t, 0)`; multiply by `mu` for the Stefan flux.
    pub slope: PeriodicFn,
    pub is_zero: bool,
    /// Periods marched before the stop rule fired.
    pub periods: usize,
    /// Last per-period change.
    pub period_change: f64,
}

impl SemiWaveProfile {
    fn zero(kind: ProfileKind, drift: &PeriodicFn, length: f64, settings: &SemiWaveSettings) -> Self {
        let nodes = grid_intervals(length, settings) + 1;
        let period = drift.period();
        Self {
            kind,
            field: SpaceTimeField::zeros(period, length, settings.stored_levels + 1, nodes),
            drift: drift.clone(),
            length,
            slope: PeriodicFn::constant_with_nodes(period, 0.0, settings.flux_samples),
            is_zero: true,
            periods: 0,
            period_change: 0.0,
        }
    }

    /// Value at `(t, z)`; zero outside `[0, length]` for the Dirichlet-zero kind, the far
    /// value beyond `length` otherwise.
    pub fn eval(&self, t: f64, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z > self.length && self.kind == ProfileKind::DirichletZero {
            return 0.0;
        }
        self.field.eval(t, z)
    }

    /// Smallest sampled boundary slope.
    pub fn min_slope(&self) -> f64 {
        self.slope.min()
    }

    fn warm_start(&self) -> WarmStart {
        WarmStart { length: self.length, values: self.field.first().to_vec() }
    }
}

/// `mu(t) v_z(t, 0)`: the operators `A0[k, l]` and `A[k]` for the respective profile kinds.
pub fn boundary_flux(profile: &SemiWaveProfile, mu: &PeriodicFn) -> Result<PeriodicFn> {
    profile.slope.zip_with(mu, |s, m| s * m)
}

#[derive(Debug, Clone)]
struct WarmStart {
    length: f64,
    values: Vec<f64>,
}

impl WarmStart {
    /// Linear interpolation onto `n + 1` nodes of `[0, length]`, continued by the last value.
    fn project(&self, length: f64, n: usize) -> Vec<f64> {
        let m = self.values.len() - 1;
        let dz_old = self.length / m as f64;
        (0..=n)
            .map(|j| {
                let z = j as f64 * length / n as f64;
                let s = z / dz_old;
                if s >= m as f64 {
                    self.values[m]
                } else {
                    let i = s.floor() as usize;
                    let w = s - i as f64;
                    (1.0 - w) * self.values[i] + w * self.values[i + 1]
                }
            })
            .collect()
    }
}

fn grid_intervals(length: f64, settings: &SemiWaveSettings) -> usize {
    ((length * settings.nodes_per_unit as f64).ceil() as usize).max(8)
}

#[derive(Clone, Copy)]
enum FarEnd<'a> {
    Zero,
    Constant(f64),
    State(&'a PeriodicFn),
}

impl FarEnd<'_> {
    fn at(&self, t: f64) -> f64 {
        match self {
            FarEnd::Zero => 0.0,
            FarEnd::Constant(c) => *c,
            FarEnd::State(p) => p.eval(t),
        }
    }
}

struct Outcome {
    profile_start: Vec<f64>,
    periods: usize,
    change: f64,
    trivial: bool,
}

/// Theta-scheme for diffusion and advection, with the reaction linearised about the old
/// level so that the scheme is linearly implicit.
struct Marcher<'a> {
    k: &'a PeriodicFn,
    env: &'a Environment,
    far: FarEnd<'a>,
    n: usize,
    dz: f64,
    dt: f64,
    steps: usize,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    solver: Tridiagonal,
}

impl<'a> Marcher<'a> {
    fn new(k: &'a PeriodicFn, env: &'a Environment, far: FarEnd<'a>, length: f64, settings: &SemiWaveSettings) -> Self {
        let n = grid_intervals(length, settings);
        Self {
            k,
            env,
            far,
            n,
            dz: length / n as f64,
            dt: k.period() / settings.steps_per_period as f64,
            steps: settings.steps_per_period,
            sub: vec![0.0; n - 1],
            diag: vec![0.0; n - 1],
            sup: vec![0.0; n - 1],
            rhs: vec![0.0; n - 1],
            solver: Tridiagonal::new(),
        }
    }

    fn step(&mut self, v: &mut [f64], t: f64, dt: f64, theta: f64) {
        let n = self.n;
        let inv_h2 = 1.0 / (self.dz * self.dz);
        let tm = t + theta * dt;
        let kk = self.k.eval(t + 0.5 * dt);
        let lower = inv_h2 - 0.5 * kk / self.dz;
        let upper = inv_h2 + 0.5 * kk / self.dz;
        let reaction = self.env.reaction.at(tm);
        let explicit = (1.0 - theta) * dt;
        let implicit = theta * dt;
        for j in 1..n {
            let u = v[j];
            let jac = reaction.derivative(u);
            let lap = lower * v[j - 1] - 2.0 * inv_h2 * u + upper * v[j + 1];
            self.rhs[j - 1] = u + explicit * lap + dt * reaction.value(u) - implicit * jac * u;
            self.sub[j - 1] = -implicit * lower;
            self.diag[j - 1] = 1.0 + 2.0 * implicit * inv_h2 - implicit * jac;
            self.sup[j - 1] = -implicit * upper;
        }
        let far_new = self.far.at(t + dt);
        self.rhs[n - 2] += implicit * upper * far_new;
        self.solver.solve(&self.sub, &self.diag, &self.sup, &mut self.rhs);
        v[0] = 0.0;
        v[1..n].copy_from_slice(&self.rhs);
        v[n] = far_new;
    }

    /// Marches whole periods until the per-period change is below `tol`.
    fn relax(
        &mut self,
        v: &mut [f64],
        tol: f64,
        max_periods: usize,
        trivial_threshold: f64,
        cold: bool,
    ) -> Result<Outcome> {
        let mut start = v.to_vec();
        let mut change = f64::INFINITY;
        let mut previous = f64::INFINITY;
        for period in 1..=max_periods {
            start.copy_from_slice(v);
            for s in 0..self.steps {
                let t = s as f64 * self.dt;
                if cold && period == 1 && s < 2 {
                    // Backward-Euler start damps the stiff modes excited by rough data.
                    self.step(v, t, 0.5 * self.dt, 1.0);
                    self.step(v, t + 0.5 * self.dt, 0.5 * self.dt, 1.0);
                } else {
                    self.step(v, t, self.dt, 0.5);
                }
            }
            change = sup_diff(v, &start);
            let sup = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if !sup.is_finite() {
                break;
            }
            if sup < trivial_threshold && matches!(self.far, FarEnd::Zero) {
                return Ok(Outcome { profile_start: v.to_vec(), periods: period, change, trivial: true });
            }
            // With geometric convergence at ratio q the distance to the limit is about
            // change * q / (1 - q); a small change alone is not enough when q is near 1.
            let q = change / previous;
            let remaining = if q < 1.0 { change * q / (1.0 - q) } else { f64::INFINITY };
            if period >= 3 && change < tol && remaining < tol {
                return Ok(Outcome { profile_start: v.to_vec(), periods: period, change, trivial: false });
            }
            previous = change;
        }
        Err(Error::NoConvergence { what: "periodic relaxation", iterations: max_periods, last_change: change })
    }

    /// One more period, storing `levels + 1` time levels and the boundary slope.
    fn record(&mut self, v: &mut [f64], settings: &SemiWaveSettings) -> (Vec<Vec<f64>>, Vec<f64>) {
        let level_stride = self.steps / settings.stored_levels;
        let flux_stride = self.steps / settings.flux_samples;
        let mut levels = Vec::with_capacity(settings.stored_levels + 1);
        let mut slope = Vec::with_capacity(settings.flux_samples);
        for s in 0..self.steps {
            if s % level_stride == 0 {
                levels.push(v.to_vec());
            }
            if s % flux_stride == 0 {
                slope.push(left_slope(v, self.dz));
            }
            let t = s as f64 * self.dt;
            self.step(v, t, self.dt, 0.5);
        }
        levels.push(v.to_vec());
        (levels, slope)
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

struct Problem<'a> {
    kind: ProfileKind,
    k: &'a PeriodicFn,
    env: &'a Environment,
    length: f64,
    settings: &'a SemiWaveSettings,
    tol: f64,
}

impl Problem<'_> {
    fn far(&self) -> FarEnd<'_> {
        match self.kind {
            ProfileKind::DirichletZero => FarEnd::Zero,
            ProfileKind::DirichletPinned => FarEnd::Constant(self.env.state_max),
            ProfileKind::HalfLine => FarEnd::State(&self.env.state),
        }
    }

    fn initial(&self, n: usize) -> Vec<f64> {
        let top = self.env.state_max;
        let dz = self.length / n as f64;
        let mut v: Vec<f64> = match self.kind {
            ProfileKind::DirichletZero => (0..=n)
                .map(|j| {
                    let z = j as f64 * dz;
                    top * z.min(self.length - z).clamp(0.0, 1.0)
                })
                .collect(),
            _ => vec![top; n + 1],
        };
        v[0] = 0.0;
        v[n] = self.far().at(0.0);
        v
    }

    fn solve(&self, warm: Option<&WarmStart>) -> Result<SemiWaveProfile> {
        self.settings.validate()?;
        self.k.same_period(&self.env.state)?;
        let far = self.far();
        let mut marcher = Marcher::new(self.k, self.env, far, self.length, self.settings);
        let n = marcher.n;
        let mut v = match warm {
            Some(w) => {
                let mut v = w.project(self.length, n);
                v[0] = 0.0;
                v[n] = far.at(0.0);
                v
            }
            None => self.initial(n),
        };
        let outcome = marcher.relax(
            &mut v,
            self.tol,
            self.settings.max_periods,
            self.settings.trivial_threshold,
            warm.is_none(),
        )?;
        let sup = outcome.profile_start.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if outcome.trivial || (self.kind == ProfileKind::DirichletZero && sup < self.settings.trivial_threshold) {
            let mut zero = SemiWaveProfile::zero(self.kind, self.k, self.length, self.settings);
            zero.periods = outcome.periods;
            zero.period_change = outcome.change;
            return Ok(zero);
        }
        let (levels, slope) = marcher.record(&mut v, self.settings);
        let period = self.k.period();
        let field = SpaceTimeField::new(period, self.length, levels);
        let change = field.periodicity_defect().max(outcome.change);
        Ok(SemiWaveProfile {
            kind: self.kind,
            field,
            drift: self.k.clone(),
            length: self.length,
            slope: PeriodicFn::from_samples(period, slope)?,
            is_zero: false,
            periods: outcome.periods,
            period_change: change,
        })
    }
}

fn check_length(length: f64) -> Result<()> {
    if length.is_finite() && length > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("interval length must be positive, got {length}")))
    }
}

/// `U0(t, z; k, l)`, or the zero profile when the problem only has the trivial solution.
pub fn relax_dirichlet_zero(
    k: &PeriodicFn,
    env: &Environment,
    length: f64,
    settings: &SemiWaveSettings,
) -> Result<SemiWaveProfile> {
    check_length(length)?;
    Problem { kind: ProfileKind::DirichletZero, k, env, length, settings, tol: settings.period_tol }.solve(None)
}

/// `U1(t, z; k, l)`, the maximal solution, reached by relaxing down from `max P`.
pub fn relax_dirichlet_pinned(
    k: &PeriodicFn,
    env: &Environment,
    length: f64,
    settings: &SemiWaveSettings,
) -> Result<SemiWaveProfile> {
    check_length(length)?;
    Problem { kind: ProfileKind::DirichletPinned, k, env, length, settings, tol: settings.period_tol }.solve(None)
}

/// Radius at which the far-field approach to `P` has decayed by roughly `e^{-16}`.
fn suggested_radius(kbar: f64, env: &Environment, settings: &SemiWaveSettings) -> f64 {
    let state = &env.state;
    let decay: f64 = state
        .times()
        .zip(state.values())
        .map(|(t, &p)| env.reaction.f_u(t, p))
        .sum::<f64>()
        / state.len() as f64;
    let kappa = 0.5 * (kbar + (kbar * kbar - 4.0 * decay.min(-1e-3)).sqrt());
    let raw = settings.min_radius.max(16.0 / kappa);
    (raw * settings.nodes_per_unit as f64).ceil() / settings.nodes_per_unit as f64
}

/// `U(t, z; k)` on `[0, Z]` with `v(t, Z) = P(t)`.
///
/// Starts from `z0` (or a radius derived from the far-field decay rate when `None`) and
/// doubles it until the boundary slope changes by less than the truncation tolerance.
pub fn half_line_profile(
    k: &PeriodicFn,
    env: &Environment,
    z0: Option<f64>,
    settings: &SemiWaveSettings,
) -> Result<SemiWaveProfile> {
    let mut op = HalfLineSolver::new(env, *settings);
    if let Some(z) = z0 {
        check_length(z)?;
        op.radius = Some(z);
    }
    let (profile, _) = op.solve_checked(k, settings.period_tol)?;
    Ok(profile)
}

/// Repeated half-line solves with warm starts and a remembered truncation radius; this is
/// what the speed fixed points iterate on.
#[derive(Debug, Clone)]
pub struct HalfLineSolver<'a> {
    env: &'a Environment,
    pub settings: SemiWaveSettings,
    radius: Option<f64>,
    warm: Option<WarmStart>,
    /// Number of relaxation solves performed so far.
    pub solves: usize,
}

impl<'a> HalfLineSolver<'a> {
    pub fn new(env: &'a Environment, settings: SemiWaveSettings) -> Self {
        Self { env, settings, radius: None, warm: None, solves: 0 }
    }

    pub fn env(&self) -> &'a Environment {
        self.env
    }

    /// Current truncation radius, once established.
    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    fn trivial(&self, k: &PeriodicFn) -> Result<Option<SemiWaveProfile>> {
        let c = self.env.cbar()?;
        if k.mean() <= -c {
            let length = self.radius.unwrap_or(self.settings.min_radius);
            return Ok(Some(SemiWaveProfile::zero(ProfileKind::HalfLine, k, length, &self.settings)));
        }
        Ok(None)
    }

    fn solve_at(&mut self, k: &PeriodicFn, radius: f64, tol: f64) -> Result<SemiWaveProfile> {
        let problem = Problem {
            kind: ProfileKind::HalfLine,
            k,
            env: self.env,
            length: radius,
            settings: &self.settings,
            tol,
        };
        let profile = problem.solve(self.warm.as_ref())?;
        self.solves += 1;
        self.warm = Some(profile.warm_start());
        Ok(profile)
    }

    /// Solves at the remembered radius without checking truncation.
    pub fn solve(&mut self, k: &PeriodicFn, tol: f64) -> Result<SemiWaveProfile> {
        if let Some(zero) = self.trivial(k)? {
            return Ok(zero);
        }
        match self.radius {
            Some(r) if r >= suggested_radius(k.mean(), self.env, &self.settings) => self.solve_at(k, r, tol),
            _ => Ok(self.solve_checked(k, tol)?.0),
        }
    }

    /// Solves with the doubling test; returns the profile at the larger radius and the
    /// sup-difference of the slopes between the two radii.
    pub fn solve_checked(&mut self, k: &PeriodicFn, tol: f64) -> Result<(SemiWaveProfile, f64)> {
        if let Some(zero) = self.trivial(k)? {
            return Ok((zero, 0.0));
        }
        let suggested = suggested_radius(k.mean(), self.env, &self.settings);
        let mut radius = self.radius.unwrap_or(suggested).max(suggested);
        let mut inner = self.solve_at(k, radius, tol)?;
        let mut difference = f64::INFINITY;
        for _ in 0..=self.settings.max_doublings {
            let outer = self.solve_at(k, 2.0 * radius, tol)?;
            difference = inner.slope.sup_distance(&outer.slope)?;
            if difference < self.settings.truncation_tol {
                self.radius = Some(radius);
                return Ok((outer, difference));
            }
            radius *= 2.0;
            inner = outer;
        }
        Err(Error::TruncationFailure { radius, difference })
    }
}

/// `W(t, x) = U0(t, S(t) - x)` with `S(t) = int_0^t speed`: a compactly supported wave
/// moving with the given front speed.
#[derive(Debug, Clone)]
pub struct CompactWave {
    profile: SemiWaveProfile,
    speed: PeriodicFn,
    /// Whether `speed(t) < mu(t) (U0)_z(t, 0)` at every sampled `t`.
    pub front_inequality: bool,
    /// `min_t [mu (U0)_z(t,0) - speed(t)]`.
    pub front_margin: f64,
}

impl CompactWave {
    /// Position of the front `S(t)`.
    pub fn front(&self, t: f64) -> f64 {
        self.speed.cumulative(t)
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let z = self.front(t) - x;
        if z <= 0.0 || z >= self.profile.length {
            0.0
        } else {
            self.profile.eval(t, z)
        }
    }

    pub fn profile(&self) -> &SemiWaveProfile {
        &self.profile
    }
}

pub fn compact_wave_view(profile: &SemiWaveProfile, speed: &PeriodicFn, mu: &PeriodicFn) -> Result<CompactWave> {
    let flux = boundary_flux(profile, mu)?;
    let margin = flux.zip_with(speed, |a, s| a - s)?.min();
    Ok(CompactWave {
        profile: profile.clone(),
        speed: speed.clone(),
        front_inequality: margin > 0.0,
        front_margin: margin,
    })
}

//! Front-fixing solver for the free boundary problem
//!
//! ```text
//! u_t = u_xx - beta(t) u_x + f(t, u),   g(t) < x < h(t),
//! u = 0,  g' = -mu u_x  at x = g(t),
//! u = 0,  h' = -mu u_x  at x = h(t),
//! ```
//!
//! written on the fixed interval `xi = (x - g) / (h - g)` in `[0, 1]`:
//!
//! ```text
//! w_t = w_xixi / s^2 + [(g' + xi s') - beta] / s * w_xi + f(t, w),   s = h - g.
//! ```
//!
//! Each step is Crank-Nicolson in `w` with the reaction linearised about the old level;
//! the front velocities are predicted by extrapolation, the fronts advanced by the
//! trapezoidal rule, and the step repeated once with the velocities it produced.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::field::{left_slope, right_slope};
use crate::linalg::Tridiagonal;
use crate::periodic::{PeriodicFn, Reaction};
use crate::{Error, Result};

/// Shape `phi` of the initial data `u0 = sigma * phi` on `[-h0, h0]`.
#[derive(Clone)]
pub enum InitialShape {
    /// `cos(pi x / (2 h0))`.
    Cosine,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for InitialShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialShape::Cosine => f.write_str("Cosine"),
            InitialShape::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub h0: f64,
    pub sigma: f64,
    pub shape: InitialShape,
}

impl InitialData {
    pub fn cosine(h0: f64, sigma: f64) -> Result<Self> {
        Self::new(h0, sigma, InitialShape::Cosine)
    }

    pub fn custom(h0: f64, sigma: f64, phi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::new(h0, sigma, InitialShape::Custom(Arc::new(phi)))
    }

    fn new(h0: f64, sigma: f64, shape: InitialShape) -> Result<Self> {
        if !(h0.is_finite() && h0 > 0.0) {
            return Err(Error::InvalidInput(format!("h0 must be positive, got {h0}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
        }
        let data = Self { h0, sigma, shape };
        let (left, right) = (data.phi(-h0), data.phi(h0));
        if left.abs() > 1e-12 || right.abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("phi must vanish at +-h0, got {left} and {right}")));
        }
        let samples: Vec<f64> = (1..256).map(|i| data.phi(-h0 + 2.0 * h0 * i as f64 / 256.0)).collect();
        if samples.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput("phi must be nonnegative on [-h0, h0]".into()));
        }
        if samples.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInput("phi must not vanish identically".into()));
        }
        Ok(data)
    }

    pub fn phi(&self, x: f64) -> f64 {
        match &self.shape {
            InitialShape::Cosine => (std::f64::consts::PI * x / (2.0 * self.h0)).cos().max(0.0),
            InitialShape::Custom(f) => f(x),
        }
    }

    pub fn u0(&self, x: f64) -> f64 {
        self.sigma * self.phi(x)
    }

    /// Same shape and support, different amplitude.
    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { sigma, ..self.clone() }
    }
}

/// Coefficients of the free boundary problem.
#[derive(Debug, Clone)]
pub struct FbpProblem {
    pub beta: PeriodicFn,
    pub mu: PeriodicFn,
    pub reaction: Reaction,
}

impl FbpProblem {
    pub fn new(beta: PeriodicFn, mu: PeriodicFn, reaction: Reaction) -> Result<Self> {
        beta.same_period(&mu)?;
        if (beta.period() - reaction.period()).abs() > 1e-12 * beta.period() {
            return Err(Error::PeriodMismatch(beta.period(), reaction.period()));
        }
        Ok(Self { beta, mu, reaction })
    }

    pub fn period(&self) -> f64 {
        self.beta.period()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FbpSettings {
    /// Intervals of the `xi` grid.
    pub nodes: usize,
    /// Macro steps per period; rejected steps are split in halves inside a macro step.
    pub steps_per_period: usize,
    /// Largest accepted change of a front velocity in the corrector.
    pub velocity_tol: f64,
    pub max_halvings: u32,
    /// Double the grid whenever `(h - g) / nodes` exceeds this.
    pub dx_max: Option<f64>,
    /// Record the series every this many macro steps.
    pub record_every: usize,
    /// Store `w` every this many periods (and at the end).
    pub snapshot_every_periods: usize,
}

impl Default for FbpSettings {
    fn default() -> Self {
        Self {
            nodes: 1024,
            steps_per_period: 1024,
            velocity_tol: 1e-8,
            max_halvings: 10,
            dx_max: None,
            record_every: 8,
            snapshot_every_periods: 1,
        }
    }
}

impl FbpSettings {
    fn validate(&self) -> Result<()> {
        if self.nodes < 8 || self.steps_per_period == 0 || self.record_every == 0 {
            return Err(Error::InvalidInput("fbp grid needs >= 8 nodes and >= 1 step per period".into()));
        }
        if !(self.velocity_tol > 0.0) {
            return Err(Error::InvalidInput("velocity tolerance must be positive".into()));
        }
        if let Some(dx) = self.dx_max {
            if !(dx > 0.0) {
                return Err(Error::InvalidInput("dx_max must be positive".into()));
            }
        }
        Ok(())
    }
}

/// The solution at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FbpState {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    /// Values at `xi_j = j / (len - 1)`.
    pub w: Vec<f64>,
    pub gdot: f64,
    pub hdot: f64,
    /// Velocities and step of the previous accepted step, for the predictor.
    previous: Option<(f64, f64, f64)>,
    /// `h - g` at the start, for the collapse test.
    initial_width: f64,
    /// Backward-Euler steps still to take before switching to Crank-Nicolson.
    damping_steps: u32,
}

impl FbpState {
    pub fn initial(problem: &FbpProblem, init: &InitialData, nodes: usize) -> Result<Self> {
        if nodes < 8 {
            return Err(Error::InvalidInput("fbp grid needs >= 8 nodes".into()));
        }
        let (g, h) = (-init.h0, init.h0);
        let mut w: Vec<f64> = (0..=nodes).map(|j| init.u0(g + (h - g) * j as f64 / nodes as f64)).collect();
        w[0] = 0.0;
        w[nodes] = 0.0;
        let mut state = Self {
            t: 0.0,
            g,
            h,
            w,
            gdot: 0.0,
            hdot: 0.0,
            previous: None,
            initial_width: h - g,
            damping_steps: STARTUP_DAMPING_STEPS,
        };
        let (gdot, hdot) = state.front_velocities(problem, 0.0);
        state.gdot = gdot;
        state.hdot = hdot;
        Ok(state)
    }

    pub fn width(&self) -> f64 {
        self.h - self.g
    }

    pub fn nodes(&self) -> usize {
        self.w.len() - 1
    }

    pub fn dx(&self) -> f64 {
        self.width() / self.nodes() as f64
    }

    pub fn x_of(&self, j: usize) -> f64 {
        self.g + self.width() * j as f64 / self.nodes() as f64
    }

    pub fn sup(&self) -> f64 {
        self.w.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `u(t, x)` by linear interpolation; zero outside `[g, h]`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.g || x >= self.h {
            return 0.0;
        }
        let n = self.nodes();
        let s = (x - self.g) / self.width() * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let a = s - i as f64;
        (1.0 - a) * self.w[i] + a * self.w[i + 1]
    }

    fn front_velocities(&self, problem: &FbpProblem, t: f64) -> (f64, f64) {
        velocities(&self.w, self.width(), problem.mu.eval(t))
    }

    /// Doubles the grid; old nodes are kept, new midpoints come from cubic interpolation.
    fn refine(&mut self) {
        let w = &self.w;
        let n = w.len() - 1;
        let mut out = Vec::with_capacity(2 * n + 1);
        for i in 0..n {
            out.push(w[i]);
            let mid = if i == 0 {
                (3.0 * w[0] + 6.0 * w[1] - w[2]) / 8.0
            } else if i == n - 1 {
                (3.0 * w[n] + 6.0 * w[n - 1] - w[n - 2]) / 8.0
            } else {
                (-w[i - 1] + 9.0 * w[i] + 9.0 * w[i + 1] - w[i + 2]) / 16.0
            };
            out.push(mid);
        }
        out.push(w[n]);
        self.w = out;
    }
}

/// Backward-Euler steps at the start of a run: the data are only compatible with the
/// boundary conditions to first order, and Crank-Nicolson alone would keep the resulting
/// stiff boundary modes alive.
const STARTUP_DAMPING_STEPS: u32 = 4;
/// Corrector sweeps allowed beyond the first before a step is split.
const MAX_EXTRA_SWEEPS: u32 = 8;

fn velocities(w: &[f64], width: f64, mu: f64) -> (f64, f64) {
    let dxi = 1.0 / (w.len() - 1) as f64;
    let gdot = -mu * left_slope(w, dxi) / width;
    let hdot = -mu * right_slope(w, dxi) / width;
    (gdot, hdot)
}

/// Scratch space reused across steps.
#[derive(Debug, Default)]
pub struct Stepper {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    solver: Tridiagonal,
}

impl Stepper {
    pub fn new() -> Self {
        Self::default()
    }

    /// Theta-step (`theta = 1/2`: Crank-Nicolson) of the fixed-domain equation with
    /// midpoint coefficients.
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &mut self,
        problem: &FbpProblem,
        w: &[f64],
        out: &mut Vec<f64>,
        t: f64,
        dt: f64,
        theta: f64,
        width: f64,
        gdot: f64,
        sdot: f64,
    ) {
        let n = w.len() - 1;
        for v in [&mut self.sub, &mut self.diag, &mut self.sup, &mut self.rhs] {
            v.resize(n - 1, 0.0);
        }
        let tm = t + theta * dt;
        let dxi = 1.0 / n as f64;
        let diffusion = 1.0 / (width * width * dxi * dxi);
        let beta = problem.beta.eval(tm);
        let reaction = problem.reaction.at(tm);
        let half = theta * dt;
        let explicit = (1.0 - theta) * dt;
        for j in 1..n {
            let xi = j as f64 * dxi;
            let drift = ((gdot + xi * sdot) - beta) / width;
            let lower = diffusion - 0.5 * drift / dxi;
            let upper = diffusion + 0.5 * drift / dxi;
            let u = w[j];
            let jac = reaction.derivative(u);
            let op = lower * w[j - 1] - 2.0 * diffusion * u + upper * w[j + 1];
            self.rhs[j - 1] = u + explicit * op + dt * reaction.value(u) - half * jac * u;
            self.sub[j - 1] = -half * lower;
            self.diag[j - 1] = 1.0 + 2.0 * half * diffusion - half * jac;
            self.sup[j - 1] = -half * upper;
        }
        self.solver.solve(&self.sub, &self.diag, &self.sup, &mut self.rhs);
        out.clear();
        out.push(0.0);
        out.extend_from_slice(&self.rhs);
        out.push(0.0);
    }
}

/// One step of size `dt`: predictor from extrapolated velocities, one corrector sweep.
pub fn advance(
    state: &FbpState,
    problem: &FbpProblem,
    dt: f64,
    settings: &FbpSettings,
    stepper: &mut Stepper,
) -> Result<FbpState> {
    step_inner(state, problem, dt, settings, stepper, false).map(|(s, _)| s)
}

fn step_inner(
    state: &FbpState,
    problem: &FbpProblem,
    dt: f64,
    settings: &FbpSettings,
    stepper: &mut Stepper,
    extra_sweeps: bool,
) -> Result<(FbpState, u32)> {
    let t = state.t;
    let (g0, h0) = (state.g, state.h);
    let (gdot0, hdot0) = (state.gdot, state.hdot);
    let (gdot_pred, hdot_pred) = match state.previous {
        Some((gp, hp, dtp)) => (gdot0 + (gdot0 - gp) * dt / dtp, hdot0 + (hdot0 - hp) * dt / dtp),
        None => (gdot0, hdot0),
    };
    let mu_new = problem.mu.eval(t + dt);
    let theta = if state.damping_steps > 0 { 1.0 } else { 0.5 };
    let mut w = Vec::with_capacity(state.w.len());

    let sweep = |stepper: &mut Stepper, w: &mut Vec<f64>, gdot_new: f64, hdot_new: f64| {
        let g1 = g0 + 0.5 * dt * (gdot0 + gdot_new);
        let h1 = h0 + 0.5 * dt * (hdot0 + hdot_new);
        let width_mid = 0.5 * ((h0 - g0) + (h1 - g1));
        let gdot_mid = (g1 - g0) / dt;
        let sdot_mid = ((h1 - g1) - (h0 - g0)) / dt;
        stepper.solve(problem, &state.w, w, t, dt, theta, width_mid, gdot_mid, sdot_mid);
        let (gd, hd) = velocities(w, h1 - g1, mu_new);
        (g1, h1, gd, hd)
    };

    let (_, _, mut gdot1, mut hdot1) = sweep(stepper, &mut w, gdot_pred, hdot_pred);
    let (mut g1, mut h1, mut gdot2, mut hdot2) = sweep(stepper, &mut w, gdot1, hdot1);
    let mut change = (gdot2 - gdot1).abs().max((hdot2 - hdot1).abs());
    let mut extra = 0;
    while extra_sweeps && !(change <= settings.velocity_tol) && extra < MAX_EXTRA_SWEEPS {
        (gdot1, hdot1) = (gdot2, hdot2);
        (g1, h1, gdot2, hdot2) = sweep(stepper, &mut w, gdot1, hdot1);
        change = (gdot2 - gdot1).abs().max((hdot2 - hdot1).abs());
        extra += 1;
    }
    if !(change <= settings.velocity_tol) {
        return Err(Error::StepRejected { t, change });
    }
    let width = h1 - g1;
    let min_width = 4.0 * state.initial_width / state.nodes() as f64;
    if !(width >= min_width) {
        return Err(Error::DomainCollapse { t: t + dt, width });
    }
    let next = FbpState {
        t: t + dt,
        g: g1,
        h: h1,
        w,
        gdot: gdot2,
        hdot: hdot2,
        previous: Some((gdot0, hdot0, dt)),
        initial_width: state.initial_width,
        damping_steps: state.damping_steps.saturating_sub(1),
    };
    Ok((next, extra))
}

/// Advances by `dt`, splitting into halves (recursively) while the single corrector sweep
/// misses the velocity tolerance. At the deepest level, typically inside the initial
/// layer, the corrector is iterated a few more times instead.
#[allow(clippy::too_many_arguments)]
fn advance_adaptive(
    state: FbpState,
    problem: &FbpProblem,
    dt: f64,
    depth: u32,
    settings: &FbpSettings,
    stepper: &mut Stepper,
    iterated: &mut usize,
) -> Result<FbpState> {
    let last_resort = depth >= settings.max_halvings;
    match step_inner(&state, problem, dt, settings, stepper, last_resort) {
        Ok((next, extra)) => {
            if extra > 0 {
                *iterated += 1;
            }
            Ok(next)
        }
        Err(Error::StepRejected { .. }) if depth < settings.max_halvings => {
            let mid = advance_adaptive(state, problem, 0.5 * dt, depth + 1, settings, stepper, iterated)?;
            advance_adaptive(mid, problem, 0.5 * dt, depth + 1, settings, stepper, iterated)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub w: Vec<f64>,
}

impl Snapshot {
    fn of(state: &FbpState) -> Self {
        Self { t: state.t, g: state.g, h: state.h, w: state.w.clone() }
    }

    /// `u(t, x)`, zero outside `[g, h]`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.g || x >= self.h {
            return 0.0;
        }
        let n = self.w.len() - 1;
        let s = (x - self.g) / (self.h - self.g) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let a = s - i as f64;
        (1.0 - a) * self.w[i] + a * self.w[i + 1]
    }

    pub fn x_of(&self, j: usize) -> f64 {
        self.g + (self.h - self.g) * j as f64 / (self.w.len() - 1) as f64
    }

    pub fn sup(&self) -> f64 {
        self.w.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Whether a simulation should keep going; checked once per period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Sampled history of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub period: f64,
    pub times: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub gdot: Vec<f64>,
    pub hdot: Vec<f64>,
    pub sup: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub settings: FbpSettings,
    pub h0: f64,
    pub sigma: f64,
    /// `1 + sup u0`.
    pub amplitude_bound: f64,
    pub stopped_early: bool,
    /// Steps at the deepest halving level that needed more than one corrector sweep.
    pub iterated_steps: usize,
    /// Final state, so a run can be continued.
    pub last: FbpState,
}

impl Trajectory {
    fn new(state: &FbpState, period: f64, settings: FbpSettings, h0: f64, sigma: f64, bound: f64) -> Self {
        let mut traj = Self {
            period,
            times: Vec::new(),
            g: Vec::new(),
            h: Vec::new(),
            gdot: Vec::new(),
            hdot: Vec::new(),
            sup: Vec::new(),
            snapshots: vec![Snapshot::of(state)],
            settings,
            h0,
            sigma,
            amplitude_bound: bound,
            stopped_early: false,
            iterated_steps: 0,
            last: state.clone(),
        };
        traj.record(state);
        traj
    }

    fn record(&mut self, s: &FbpState) {
        self.times.push(s.t);
        self.g.push(s.g);
        self.h.push(s.h);
        self.gdot.push(s.gdot);
        self.hdot.push(s.hdot);
        self.sup.push(s.sup());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.last.t
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory always holds the initial snapshot")
    }

    /// Indices of samples with `t >= from`.
    pub fn since(&self, from: f64) -> std::ops::Range<usize> {
        let start = self.times.partition_point(|&t| t < from - 1e-12);
        start..self.times.len()
    }

    /// Appends a continuation run; its first sample duplicates our last and is skipped.
    pub fn append(&mut self, next: Trajectory) {
        let skip = usize::from(self.times.last() == next.times.first());
        self.times.extend_from_slice(&next.times[skip..]);
        self.g.extend_from_slice(&next.g[skip..]);
        self.h.extend_from_slice(&next.h[skip..]);
        self.gdot.extend_from_slice(&next.gdot[skip..]);
        self.hdot.extend_from_slice(&next.hdot[skip..]);
        self.sup.extend_from_slice(&next.sup[skip..]);
        let snap_skip = usize::from(self.snapshots.last().map(|s| s.t) == next.snapshots.first().map(|s| s.t));
        self.snapshots.extend(next.snapshots.into_iter().skip(snap_skip));
        self.stopped_early = next.stopped_early;
        self.iterated_steps += next.iterated_steps;
        self.last = next.last;
    }
}

/// Runs from the initial data to `horizon_periods` periods.
pub fn simulate(
    problem: &FbpProblem,
    init: &InitialData,
    horizon_periods: usize,
    settings: &FbpSettings,
    monitor: Option<&mut dyn FnMut(&FbpState) -> Control>,
) -> Result<Trajectory> {
    settings.validate()?;
    let state = FbpState::initial(problem, init, settings.nodes)?;
    let bound = 1.0 + state.sup().max((0..=2048).map(|i| init.u0(-init.h0 + init.h0 * i as f64 / 1024.0)).fold(0.0, f64::max));
    continue_run(problem, state, horizon_periods, settings, monitor, init.h0, init.sigma, bound)
}

/// Continues `traj` for another `periods` periods from its last state and appends the result.
pub fn extend(
    problem: &FbpProblem,
    traj: &mut Trajectory,
    periods: usize,
    monitor: Option<&mut dyn FnMut(&FbpState) -> Control>,
) -> Result<()> {
    let settings = traj.settings;
    let next = continue_run(
        problem,
        traj.last.clone(),
        periods,
        &settings,
        monitor,
        traj.h0,
        traj.sigma,
        traj.amplitude_bound,
    )?;
    traj.append(next);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn continue_run(
    problem: &FbpProblem,
    mut state: FbpState,
    periods: usize,
    settings: &FbpSettings,
    mut monitor: Option<&mut dyn FnMut(&FbpState) -> Control>,
    h0: f64,
    sigma: f64,
    bound: f64,
) -> Result<Trajectory> {
    let period = problem.period();
    let dt = period / settings.steps_per_period as f64;
    let mut traj = Trajectory::new(&state, period, *settings, h0, sigma, bound);
    let mut stepper = Stepper::new();
    let start_period = (state.t / period).round() as usize;
    let mut iterated = 0;
    for p in 0..periods {
        for s in 0..settings.steps_per_period {
            if let Some(dx) = settings.dx_max {
                while state.dx() > dx {
                    state.refine();
                }
            }
            let base = (start_period + p) as f64 * period;
            let target = base + (s + 1) as f64 * dt;
            if state.previous.is_none() && nearly_flat_start(&state) {
                // Zero initial slope would freeze the fronts for a whole step.
                state = advance_adaptive(state, problem, 0.25 * dt, 0, settings, &mut stepper, &mut iterated)?;
            }
            let step = target - state.t;
            state = advance_adaptive(state, problem, step, 0, settings, &mut stepper, &mut iterated)?;
            state.t = target;
            if (s + 1) % settings.record_every == 0 || s + 1 == settings.steps_per_period {
                traj.record(&state);
            }
        }
        let done = p + 1 == periods;
        if (start_period + p + 1) % settings.snapshot_every_periods.max(1) == 0 || done {
            traj.snapshots.push(Snapshot::of(&state));
        }
        if let Some(m) = monitor.as_deref_mut() {
            if m(&state) == Control::Stop {
                traj.stopped_early = !done;
                if !done && traj.snapshots.last().map(|s| s.t) != Some(state.t) {
                    traj.snapshots.push(Snapshot::of(&state));
                }
                break;
            }
        }
    }
    traj.last = state;
    traj.iterated_steps = iterated;
    Ok(traj)
}

fn nearly_flat_start(state: &FbpState) -> bool {
    let sup = state.sup();
    sup > 0.0 && (state.gdot.abs() + state.hdot.abs()) < 1e-8 * sup
}

#[cfg(test)]
mod tests {
    use super::*;

    fn homogeneous(beta: f64) -> FbpProblem {
        FbpProblem::new(
            PeriodicFn::constant(1.0, beta),
            PeriodicFn::constant(1.0, 1.0),
            Reaction::homogeneous_logistic(1.0, 1.0, 1.0),
        )
        .unwrap()
    }

    fn small() -> FbpSettings {
        FbpSettings { nodes: 128, steps_per_period: 128, record_every: 4, ..Default::default() }
    }

    #[test]
    fn zero_state_is_invariant() {
        let p = homogeneous(1.0);
        let init = InitialData::cosine(1.0, 0.0).unwrap();
        let s = small();
        let state = FbpState::initial(&p, &init, s.nodes).unwrap();
        let next = advance(&state, &p, 0.01, &s, &mut Stepper::new()).unwrap();
        assert_eq!(next.g, -1.0);
        assert_eq!(next.h, 1.0);
        assert_eq!(next.gdot, 0.0);
        assert_eq!(next.hdot, 0.0);
        assert!(next.w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_data_stays_symmetric() {
        let p = homogeneous(0.0);
        let init = InitialData::cosine(1.0, 1.0).unwrap();
        let traj = simulate(&p, &init, 3, &small(), None).unwrap();
        for (g, h) in traj.g.iter().zip(&traj.h) {
            assert!((g + h).abs() < 1e-8 * (h - g));
        }
        let w = &traj.last.w;
        let n = w.len() - 1;
        for j in 0..=n {
            assert!((w[j] - w[n - j]).abs() < 1e-10);
        }
    }

    #[test]
    fn fronts_move_outward_and_amplitude_is_bounded() {
        let p = homogeneous(0.5);
        let init = InitialData::cosine(1.0, 2.0).unwrap();
        let traj = simulate(&p, &init, 4, &small(), None).unwrap();
        for i in 1..traj.len() {
            assert!(traj.hdot[i] > 0.0 && traj.gdot[i] < 0.0);
            assert!(traj.h[i] >= traj.h[i - 1] && traj.g[i] <= traj.g[i - 1]);
            assert!(traj.sup[i] <= traj.amplitude_bound);
        }
        for snap in &traj.snapshots[1..] {
            let n = snap.w.len() - 1;
            assert!(snap.w[1..n].iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn rejects_invalid_initial_data() {
        assert!(InitialData::cosine(-1.0, 1.0).is_err());
        assert!(InitialData::cosine(1.0, -1.0).is_err());
        assert!(InitialData::custom(1.0, 1.0, |x| 1.0 - x * x / 4.0).is_err());
        assert!(InitialData::custom(1.0, 1.0, |_| 0.0).is_err());
        assert!(InitialData::custom(1.0, 1.0, |x| 1.0 - x * x).is_ok());
    }

    #[test]
    fn regridding_keeps_spacing_bounded() {
        let p = homogeneous(0.0);
        let init = InitialData::cosine(2.0, 1.0).unwrap();
        let s = FbpSettings { nodes: 32, steps_per_period: 128, dx_max: Some(0.1), ..Default::default() };
        let traj = simulate(&p, &init, 5, &s, None).unwrap();
        assert!(traj.last.dx() <= 0.1);
        assert!(traj.last.nodes() > 32);
    }

    #[test]
    fn monitor_can_stop_early() {
        let p = homogeneous(0.0);
        let init = InitialData::cosine(0.5, 0.1).unwrap();
        let mut count = 0;
        let mut stop_after_two = |_: &FbpState| {
            count += 1;
            if count == 2 { Control::Stop } else { Control::Continue }
        };
        let traj = simulate(&p, &init, 10, &small(), Some(&mut stop_after_two)).unwrap();
        assert!(traj.stopped_early);
        assert!((traj.end_time() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn extension_continues_where_the_run_ended() {
        let p = homogeneous(0.0);
        let init = InitialData::cosine(1.0, 1.0).unwrap();
        let s = small();
        let full = simulate(&p, &init, 4, &s, None).unwrap();
        let mut pieces = simulate(&p, &init, 2, &s, None).unwrap();
        extend(&p, &mut pieces, 2, None).unwrap();
        assert_eq!(pieces.times.len(), full.times.len());
        assert!((pieces.last.h - full.last.h).abs() < 1e-12);
        assert_eq!(pieces.snapshots.len(), full.snapshots.len());
    }
}

//! Long-time outcome detection, threshold bisection in `sigma` and front asymptotics.
//!
//! The limits `t -> inf` are replaced by finite-time surrogates: a fixed observation
//! window `[-K, K]`, a moving window of the same width centred at `c1 t` with
//! `c1 = (mean beta - cbar + mean r) / 2`, an extinction threshold for `sup u` and a
//! closeness threshold for `|u - P(t)|`. Runs are checked once per period and stop as
//! soon as a rule fires; a run in which no rule fires is extended (doubling its
//! horizon) a bounded number of times and is otherwise reported as undetermined.

use serde::Serialize;

use crate::critical::{CriticalSpeeds, Regime};
use crate::fbp::{extend, simulate, Control, FbpProblem, FbpSettings, FbpState, InitialData, Snapshot, Trajectory};
use crate::periodic::Environment;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutcomeKind {
    Vanishing,
    Spreading,
    VirtualSpreading,
    /// Only assigned by [`critical_sigma`] to undetermined probes inside the final bracket.
    Transition,
    Undetermined,
}

impl OutcomeKind {
    /// Spreading or virtual spreading.
    pub fn spreads(self) -> bool {
        matches!(self, OutcomeKind::Spreading | OutcomeKind::VirtualSpreading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Confidence {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifySettings {
    /// Half-width `K` of the observation windows; also the escape radius for the fronts.
    pub window: f64,
    pub extinction: f64,
    /// Threshold for `|u - P|` (and for `u` itself on the fixed window of a virtual spread).
    pub near_state: f64,
    pub horizon_periods: usize,
    /// Extensions double the simulated time.
    pub max_extensions: usize,
    /// No early stop before this many periods.
    pub min_periods: usize,
    /// Periodic checks after the first that must agree before a run stops early; an
    /// outcome is high-confidence when this many earlier snapshots agree with it.
    pub confirm_periods: usize,
    /// Slack, in grid cells, on the bound `h - g <= l*`.
    pub margin_cells: f64,
    /// Largest drift of `g` over the last quarter of a run still counted as bounded.
    pub drift_tol: f64,
    /// Sample points per window.
    pub window_samples: usize,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            window: 10.0,
            extinction: 1e-4,
            near_state: 1e-2,
            horizon_periods: 60,
            max_extensions: 4,
            min_periods: 2,
            confirm_periods: 3,
            margin_cells: 3.0,
            drift_tol: 1e-2,
            window_samples: 401,
        }
    }
}

impl ClassifySettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.window, self.extinction, self.near_state, self.drift_tol];
        if positive.iter().any(|v| !(*v > 0.0)) || self.margin_cells < 0.0 {
            return Err(Error::InvalidInput("classification thresholds must be positive".into()));
        }
        if self.horizon_periods == 0 || self.window_samples < 2 {
            return Err(Error::InvalidInput("classification needs a positive horizon and >= 2 window samples".into()));
        }
        Ok(())
    }
}

/// The measurements behind an [`Outcome`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub t_end: f64,
    pub sup_norm: f64,
    pub g: f64,
    pub h: f64,
    pub width: f64,
    pub grid: f64,
    /// `l*(-beta, a) + margin`, when the advection is small.
    pub length_bound: Option<f64>,
    /// `sup |u - P|` on `[-K, K]`.
    pub fixed_deviation: f64,
    /// `sup u` on `[-K, K]`.
    pub fixed_sup: f64,
    pub moving_speed: f64,
    /// `sup |u - P|` on `[c1 t - K, c1 t + K]`.
    pub moving_deviation: f64,
    /// `|g(t_end) - g(3 t_end / 4)|`.
    pub g_drift: f64,
    pub triggered: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub evidence: Evidence,
    pub confidence: Confidence,
}

/// `c1 = (mean beta - cbar + mean r) / 2`.
pub fn moving_speed(crit: &CriticalSpeeds) -> f64 {
    0.5 * (crit.beta_mean - crit.cbar + crit.mean_r())
}

struct Windows {
    fixed_deviation: f64,
    fixed_sup: f64,
    moving_deviation: f64,
}

fn windows(snap: &Snapshot, crit: &CriticalSpeeds, env: &Environment, s: &ClassifySettings) -> Windows {
    let p = env.state.eval(snap.t);
    let k = s.window;
    let scan = |centre: f64| {
        let (mut dev, mut sup) = (0.0_f64, 0.0_f64);
        for i in 0..s.window_samples {
            let x = centre - k + 2.0 * k * i as f64 / (s.window_samples - 1) as f64;
            let u = snap.eval(x);
            dev = dev.max((u - p).abs());
            sup = sup.max(u);
        }
        (dev, sup)
    };
    let (fixed_deviation, fixed_sup) = scan(0.0);
    let (moving_deviation, _) = scan(moving_speed(crit) * snap.t);
    Windows { fixed_deviation, fixed_sup, moving_deviation }
}

fn length_bound(crit: &CriticalSpeeds, grid: f64, s: &ClassifySettings) -> Option<f64> {
    match crit.regime.regime {
        Regime::Small => crit.ell_star.map(|l| l + s.margin_cells * grid),
        _ => None,
    }
}

/// Applies the decision rules to the final state of `traj`.
///
/// The outcome is high-confidence when the rules give the same verdict on each of the
/// `confirm_periods` preceding snapshots.
pub fn classify(traj: &Trajectory, crit: &CriticalSpeeds, env: &Environment, settings: &ClassifySettings) -> Outcome {
    let grid = traj.last.dx();
    let at = |snap: &Snapshot| {
        let quarter = traj.since(0.75 * snap.t).start.min(traj.g.len() - 1);
        decide(snap, grid, (snap.g - traj.g[quarter]).abs(), crit, env, settings)
    };
    let n = traj.snapshots.len();
    let mut outcome = at(&traj.snapshots[n - 1]);
    if outcome.kind != OutcomeKind::Undetermined {
        let earlier = &traj.snapshots[n.saturating_sub(settings.confirm_periods + 1)..n - 1];
        let agree = earlier.len() == settings.confirm_periods && earlier.iter().all(|s| at(s).kind == outcome.kind);
        outcome.confidence = if agree { Confidence::High } else { Confidence::Low };
    }
    outcome
}

fn decide(
    snap: &Snapshot,
    grid: f64,
    g_drift: f64,
    crit: &CriticalSpeeds,
    env: &Environment,
    s: &ClassifySettings,
) -> Outcome {
    let w = windows(snap, crit, env, s);
    let c1 = moving_speed(crit);
    let width = snap.h - snap.g;
    let bound = length_bound(crit, grid, s);
    let mut evidence = Evidence {
        t_end: snap.t,
        sup_norm: snap.sup(),
        g: snap.g,
        h: snap.h,
        width,
        grid,
        length_bound: bound,
        fixed_deviation: w.fixed_deviation,
        fixed_sup: w.fixed_sup,
        moving_speed: c1,
        moving_deviation: w.moving_deviation,
        g_drift,
        triggered: Vec::new(),
    };
    let k = s.window;

    if evidence.sup_norm < s.extinction {
        evidence.triggered.push(format!("sup u = {:e} < {:e}", evidence.sup_norm, s.extinction));
        match bound {
            Some(b) if width > b => {
                evidence.triggered.push(format!("h - g = {width} exceeds l* + margin = {b}"));
            }
            _ => {
                if let Some(b) = bound {
                    evidence.triggered.push(format!("h - g = {width} <= l* + margin = {b}"));
                }
                return finish(OutcomeKind::Vanishing, evidence);
            }
        }
    }

    if snap.g < -k && snap.h > k && w.fixed_deviation < s.near_state {
        evidence.triggered.push(format!("fronts beyond +-{k}; sup |u - P| on window = {:e}", w.fixed_deviation));
        return finish(OutcomeKind::Spreading, evidence);
    }

    let centre = c1 * snap.t;
    if c1 > 0.0
        && g_drift < s.drift_tol
        && snap.h > centre + k
        && w.fixed_sup < s.near_state
        && w.moving_deviation < s.near_state
    {
        evidence.triggered.push(format!(
            "g settled (drift {g_drift:e}); u <= {:e} on fixed window; sup |u - P| = {:e} around {centre}",
            w.fixed_sup, w.moving_deviation
        ));
        return finish(OutcomeKind::VirtualSpreading, evidence);
    }

    evidence.triggered.push("no rule fired".into());
    finish(OutcomeKind::Undetermined, evidence)
}

fn finish(kind: OutcomeKind, evidence: Evidence) -> Outcome {
    Outcome { kind, evidence, confidence: Confidence::Low }
}

/// Per-period monitor: stops the run as soon as some rule fires.
struct Watch<'a> {
    crit: &'a CriticalSpeeds,
    env: &'a Environment,
    settings: &'a ClassifySettings,
    start: f64,
    history: Vec<(f64, f64)>,
    streak: Option<(OutcomeKind, usize)>,
}

impl Watch<'_> {
    fn check(&mut self, state: &FbpState) -> Control {
        self.history.push((state.t, state.g));
        let periods = (state.t - self.start) / self.env.period();
        if periods + 1e-9 < self.settings.min_periods as f64 {
            return Control::Continue;
        }
        let from = 0.75 * state.t;
        let i = self.history.partition_point(|&(t, _)| t < from - 1e-12);
        let g_then = self.history.get(i).map_or(state.g, |&(_, g)| g);
        let snap = Snapshot { t: state.t, g: state.g, h: state.h, w: state.w.clone() };
        let outcome = decide(&snap, state.dx(), (state.g - g_then).abs(), self.crit, self.env, self.settings);
        let count = match self.streak {
            Some((kind, n)) if kind == outcome.kind => n + 1,
            _ => 1,
        };
        self.streak = Some((outcome.kind, count));
        if outcome.kind != OutcomeKind::Undetermined && count > self.settings.confirm_periods {
            Control::Stop
        } else {
            Control::Continue
        }
    }
}

/// Simulates and classifies, extending the horizon while no rule fires.
pub fn classify_run(
    problem: &FbpProblem,
    init: &InitialData,
    crit: &CriticalSpeeds,
    env: &Environment,
    fbp: &FbpSettings,
    settings: &ClassifySettings,
) -> Result<(Trajectory, Outcome)> {
    settings.validate()?;
    let mut watch = Watch { crit, env, settings, start: 0.0, history: Vec::new(), streak: None };
    let mut monitor = |s: &FbpState| watch.check(s);
    let mut traj = simulate(problem, init, settings.horizon_periods, fbp, Some(&mut monitor))?;
    let mut outcome = classify(&traj, crit, env, settings);
    let mut horizon = settings.horizon_periods;
    for _ in 0..settings.max_extensions {
        if outcome.kind != OutcomeKind::Undetermined {
            break;
        }
        let mut monitor = |s: &FbpState| watch.check(s);
        extend(problem, &mut traj, horizon, Some(&mut monitor))?;
        horizon *= 2;
        outcome = classify(&traj, crit, env, settings);
    }
    Ok((traj, outcome))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSettings {
    pub bracket: (f64, f64),
    /// Stop once `sigma_high - sigma_low <= max(abs_tol, rel_tol * sigma_high)`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Total number of simulations.
    pub max_probes: usize,
    pub expansion_factor: f64,
    pub max_expansions: usize,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        Self { bracket: (0.1, 10.0), rel_tol: 1e-2, abs_tol: 0.0, max_probes: 40, expansion_factor: 4.0, max_expansions: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub sigma: f64,
    pub kind: OutcomeKind,
    pub confidence: Confidence,
    pub t_end: f64,
    pub width: f64,
    pub grid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    /// Largest tested `sigma` that vanished.
    pub sigma_low: f64,
    /// Smallest tested `sigma` that spread (or spread virtually).
    pub sigma_high: f64,
    pub bracket_width: f64,
    /// Every probe in the order it was run.
    pub probes: Vec<Probe>,
    pub converged: bool,
    pub confidence: Confidence,
}

impl ThresholdResult {
    /// No vanishing probe above a spreading one.
    pub fn is_monotone(&self) -> bool {
        let lowest_spread = self.probes.iter().filter(|p| p.kind.spreads()).map(|p| p.sigma).fold(f64::INFINITY, f64::min);
        self.probes.iter().filter(|p| p.kind == OutcomeKind::Vanishing).all(|p| p.sigma < lowest_spread)
    }

    pub fn transition_candidates(&self) -> impl Iterator<Item = &Probe> {
        self.probes.iter().filter(|p| p.kind == OutcomeKind::Transition)
    }
}

/// Context shared by all probes of one threshold search.
pub struct ThresholdContext<'a> {
    pub problem: &'a FbpProblem,
    pub crit: &'a CriticalSpeeds,
    pub env: &'a Environment,
    pub fbp: FbpSettings,
    pub classify: ClassifySettings,
}

impl ThresholdContext<'_> {
    fn probe(&self, init: &InitialData, sigma: f64, log: &mut Vec<Probe>) -> Result<OutcomeKind> {
        let (traj, outcome) = classify_run(self.problem, &init.with_sigma(sigma), self.crit, self.env, &self.fbp, &self.classify)?;
        log.push(Probe {
            sigma,
            kind: outcome.kind,
            confidence: outcome.confidence,
            t_end: traj.end_time(),
            width: outcome.evidence.width,
            grid: outcome.evidence.grid,
        });
        Ok(outcome.kind)
    }
}

/// Bisection for the sharp threshold in `sigma` between vanishing and (virtual) spreading.
///
/// The bracket is widened geometrically until its ends classify differently. Undetermined
/// probes never move an end; instead the two quarter points next to them are probed, and
/// if neither resolves the search stops with the undetermined points labelled
/// [`OutcomeKind::Transition`].
pub fn critical_sigma(ctx: &ThresholdContext<'_>, init: &InitialData, settings: &ThresholdSettings) -> Result<ThresholdResult> {
    if ctx.crit.regime.regime == Regime::Large {
        return Err(Error::RegimeError(format!(
            "mean(beta) = {} is at or above the critical average advection; every sigma vanishes",
            ctx.crit.beta_mean
        )));
    }
    let (mut lo, mut hi) = settings.bracket;
    if !(lo > 0.0 && hi > lo) || !(settings.expansion_factor > 1.0) {
        return Err(Error::InvalidInput(format!("bad sigma bracket ({lo}, {hi})")));
    }
    let mut probes = Vec::new();
    let budget = |p: &Vec<Probe>| p.len() >= settings.max_probes;

    // Establish lo vanishing, hi spreading.
    let mut lo_kind = ctx.probe(init, lo, &mut probes)?;
    let mut hi_kind = ctx.probe(init, hi, &mut probes)?;
    let mut expansions = 0;
    while !(lo_kind == OutcomeKind::Vanishing && hi_kind.spreads()) {
        if expansions == settings.max_expansions || budget(&probes) {
            return Err(Error::BracketFailure(format!(
                "after {expansions} expansions sigma in [{lo}, {hi}] gives {lo_kind:?} / {hi_kind:?}{}",
                if lo_kind == OutcomeKind::Vanishing { "; consistent with sigma* = infinity" } else { "" }
            )));
        }
        expansions += 1;
        if lo_kind != OutcomeKind::Vanishing {
            if lo_kind.spreads() {
                hi = lo;
                hi_kind = lo_kind;
            }
            lo /= settings.expansion_factor;
            lo_kind = ctx.probe(init, lo, &mut probes)?;
        } else {
            if hi_kind == OutcomeKind::Vanishing {
                lo = hi;
            }
            hi *= settings.expansion_factor;
            hi_kind = ctx.probe(init, hi, &mut probes)?;
        }
    }

    let tol = |hi: f64| settings.abs_tol.max(settings.rel_tol * hi);
    let mut undetermined: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut stuck = false;
    while !budget(&probes) {
        if hi - lo <= tol(hi) {
            converged = true;
            break;
        }
        let mid = 0.5 * (lo + hi);
        match ctx.probe(init, mid, &mut probes)? {
            OutcomeKind::Vanishing => lo = mid,
            k if k.spreads() => hi = mid,
            _ => {
                undetermined.push(mid);
                let mut moved = false;
                for sigma in [0.5 * (lo + mid), 0.5 * (mid + hi)] {
                    if budget(&probes) {
                        break;
                    }
                    match ctx.probe(init, sigma, &mut probes)? {
                        OutcomeKind::Vanishing if sigma > lo => {
                            lo = sigma;
                            moved = true;
                        }
                        k if k.spreads() && sigma < hi => {
                            hi = sigma;
                            moved = true;
                        }
                        OutcomeKind::Undetermined => undetermined.push(sigma),
                        _ => {}
                    }
                }
                if !moved {
                    stuck = true;
                    break;
                }
            }
        }
    }
    if !converged && hi - lo <= tol(hi) {
        converged = true;
    }
    for p in probes.iter_mut() {
        if p.kind == OutcomeKind::Undetermined && p.sigma > lo && p.sigma < hi {
            p.kind = OutcomeKind::Transition;
        }
    }
    let any_undetermined = !undetermined.is_empty() || probes.iter().any(|p| p.kind == OutcomeKind::Undetermined);
    let confidence = if any_undetermined || stuck || !converged { Confidence::Low } else { Confidence::High };
    Ok(ThresholdResult { sigma_low: lo, sigma_high: hi, bracket_width: hi - lo, probes, converged, confidence })
}

/// Left-front diagnostics, available for small advection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeftAsymptotics {
    /// Mean of `g + L` over the final quarter.
    pub g1: f64,
    pub g_plus_l: Vec<f64>,
    /// `g'(t) + l(t)`.
    pub speed_residual: Vec<f64>,
    /// `sup |u - U_l(t, x + L(t) - G1)|` over `[g(t), 0]`, per snapshot.
    pub profile_sup: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub times: Vec<f64>,
    /// Mean of `h - R` over the final quarter.
    pub h1: f64,
    pub h_minus_r: Vec<f64>,
    /// `h'(t) - r(t)`.
    pub speed_residual: Vec<f64>,
    pub profile_times: Vec<f64>,
    /// `sup |u - U(t, R(t) + H1 - x)|` over `[max(c_l t, 0), h(t)]`, per snapshot.
    pub profile_sup: Vec<f64>,
    pub c_l: f64,
    pub eps0: f64,
    pub left: Option<LeftAsymptotics>,
}

fn max_abs_since(times: &[f64], series: &[f64], from: f64) -> f64 {
    times.iter().zip(series).filter(|(t, _)| **t >= from - 1e-12).fold(0.0, |m, (_, v)| m.max(v.abs()))
}

fn peak_to_peak_since(times: &[f64], series: &[f64], from: f64) -> f64 {
    let (lo, hi) = times
        .iter()
        .zip(series)
        .filter(|(t, _)| **t >= from - 1e-12)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(*v), hi.max(*v)));
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

impl AsymptoticsReport {
    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn speed_residual_max(&self, from: f64) -> f64 {
        max_abs_since(&self.times, &self.speed_residual, from)
    }

    pub fn h_minus_r_peak_to_peak(&self, from: f64) -> f64 {
        peak_to_peak_since(&self.times, &self.h_minus_r, from)
    }

    pub fn profile_sup_max(&self, from: f64) -> f64 {
        max_abs_since(&self.profile_times, &self.profile_sup, from)
    }

    pub fn left_speed_residual_max(&self, from: f64) -> Option<f64> {
        self.left.as_ref().map(|l| max_abs_since(&self.times, &l.speed_residual, from))
    }

    pub fn g_plus_l_peak_to_peak(&self, from: f64) -> Option<f64> {
        self.left.as_ref().map(|l| peak_to_peak_since(&self.times, &l.g_plus_l, from))
    }

    pub fn left_profile_sup_max(&self, from: f64) -> Option<f64> {
        self.left.as_ref().map(|l| max_abs_since(&self.profile_times, &l.profile_sup, from))
    }

    /// Peak-to-peak of `h - R` over the two halves of the final quarter: `(earlier, later)`.
    pub fn h_trend_amplitudes(&self) -> (f64, f64) {
        let t = self.end_time();
        let mid = 0.875 * t;
        let earlier = peak_to_peak_since_until(&self.times, &self.h_minus_r, 0.75 * t, mid);
        (earlier, self.h_minus_r_peak_to_peak(mid))
    }
}

fn peak_to_peak_since_until(times: &[f64], series: &[f64], from: f64, until: f64) -> f64 {
    let (lo, hi) = times
        .iter()
        .zip(series)
        .filter(|(t, _)| **t >= from - 1e-12 && **t <= until + 1e-12)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(*v), hi.max(*v)));
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

fn mean_since(times: &[f64], series: &[f64], from: f64) -> f64 {
    let (sum, n) = times
        .iter()
        .zip(series)
        .filter(|(t, _)| **t >= from - 1e-12)
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
    sum / n.max(1) as f64
}

/// Compares the fronts and the solution with the semi-wave predictions
/// `h ~ R(t) + H1`, `u ~ U(t, R(t) + H1 - x)` (and the left analogues when available).
pub fn front_asymptotics(traj: &Trajectory, crit: &CriticalSpeeds) -> AsymptoticsReport {
    let times = traj.times.clone();
    let from = 0.75 * traj.end_time();
    let r = &crit.right.speed;
    let h_minus_r: Vec<f64> = times.iter().zip(&traj.h).map(|(&t, &h)| h - crit.right_position(t)).collect();
    let speed_residual: Vec<f64> = times.iter().zip(&traj.hdot).map(|(&t, &v)| v - r.eval(t)).collect();
    let h1 = mean_since(&times, &h_minus_r, from);
    let eps0 = 0.05 * (crit.mean_r() - (crit.beta_mean - crit.cbar));
    let c_l = crit.beta_mean - crit.cbar + eps0;

    let profile_times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let profile_sup = traj
        .snapshots
        .iter()
        .map(|s| {
            let start = (c_l * s.t).max(0.0).max(s.g);
            let shift = crit.right_position(s.t) + h1;
            sup_over_nodes(s, start, s.h, |x| crit.right.profile.eval(s.t, shift - x))
        })
        .collect();

    let left = crit.left.as_ref().map(|l| {
        let g_plus_l: Vec<f64> =
            times.iter().zip(&traj.g).map(|(&t, &g)| g + crit.left_position(t).unwrap_or(0.0)).collect();
        let speed_residual = times.iter().zip(&traj.gdot).map(|(&t, &v)| v + l.speed.eval(t)).collect();
        let g1 = mean_since(&times, &g_plus_l, from);
        let profile_sup = traj
            .snapshots
            .iter()
            .map(|s| {
                let shift = l.position(s.t) - g1;
                sup_over_nodes(s, s.g, s.h.min(0.0), |x| l.profile.eval(s.t, x + shift))
            })
            .collect();
        LeftAsymptotics { g1, g_plus_l, speed_residual, profile_sup }
    });

    AsymptoticsReport { times, h1, h_minus_r, speed_residual, profile_times, profile_sup, c_l, eps0, left }
}

/// `sup |u - v|` over the snapshot nodes in `[a, b]`.
fn sup_over_nodes(s: &Snapshot, a: f64, b: f64, v: impl Fn(f64) -> f64) -> f64 {
    (0..s.w.len())
        .map(|j| (s.x_of(j), s.w[j]))
        .filter(|(x, _)| *x >= a && *x <= b)
        .fold(0.0, |m, (x, u)| m.max((u - v(x)).abs()))
}

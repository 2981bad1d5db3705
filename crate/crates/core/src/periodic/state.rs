use super::{PeriodicFn, Reaction, DEFAULT_NODES};
use crate::{Error, Result};

/// Lower end of the Poincare-map bracket.
const BRACKET_FLOOR: f64 = 1e-10;
/// RK4 substeps between consecutive output nodes.
const SUBSTEPS: usize = 16;

/// Settings for [`periodic_state`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSettings {
    /// Output nodes per period.
    pub nodes: usize,
    /// Initial upper end of the bracket is `1 + overshoot`; it is doubled if needed.
    pub overshoot: f64,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self { nodes: DEFAULT_NODES, overshoot: 1.0 }
    }
}

fn rk4_step(f: &Reaction, t: f64, u: f64, dt: f64) -> f64 {
    let k1 = f.f(t, u);
    let k2 = f.f(t + 0.5 * dt, u + 0.5 * dt * k1);
    let k3 = f.f(t + 0.5 * dt, u + 0.5 * dt * k2);
    let k4 = f.f(t + dt, u + dt * k3);
    u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates `u' = f(t, u)` over one period, calling `visit(i, u)` at each output node.
fn sweep(f: &Reaction, u0: f64, nodes: usize, mut visit: impl FnMut(usize, f64)) -> f64 {
    let period = f.period();
    let dt = period / (nodes * SUBSTEPS) as f64;
    let mut u = u0;
    for i in 0..nodes {
        visit(i, u);
        for s in 0..SUBSTEPS {
            let t = (i * SUBSTEPS + s) as f64 * dt;
            u = rk4_step(f, t, u, dt);
        }
    }
    u
}

/// The unique positive T-periodic solution `P(t)` of `u' = f(t, u)`.
///
/// Bisection on `u0 -> Phi_T(u0) - u0` where `Phi_T` is the time-T map.
pub fn periodic_state(f: &Reaction, settings: &OdeSettings) -> Result<PeriodicFn> {
    let nodes = settings.nodes.max(super::MIN_NODES);
    let excess = |u0: f64| sweep(f, u0, nodes, |_, _| {}) - u0;

    let lo0 = BRACKET_FLOOR;
    let mut hi = 1.0 + settings.overshoot;
    if excess(lo0) <= 0.0 {
        return Err(Error::NoPositivePeriodicState { upper: hi });
    }
    let mut grown = 0;
    loop {
        let e = excess(hi);
        if !e.is_finite() {
            return Err(Error::NoPositivePeriodicState { upper: hi });
        }
        if e < 0.0 {
            break;
        }
        grown += 1;
        if grown > 40 {
            return Err(Error::NoPositivePeriodicState { upper: hi });
        }
        hi *= 2.0;
    }

    let mut lo = lo0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u0 = 0.5 * (lo + hi);

    let mut samples = vec![0.0; nodes];
    sweep(f, u0, nodes, |i, u| samples[i] = u);
    PeriodicFn::from_samples(f.period(), samples)
}

/// `alpha(t) = P f_u(t, P) - f(t, P)` on the grid of `P`, and whether `max alpha < 0`.
pub fn stability_index(f: &Reaction, state: &PeriodicFn) -> (PeriodicFn, bool) {
    let values: Vec<f64> = state
        .times()
        .zip(state.values())
        .map(|(t, &p)| p * f.f_u(t, p) - f.f(t, p))
        .collect();
    let alpha = PeriodicFn::from_samples(state.period(), values).expect("grid inherited from P");
    let stable = alpha.max() < 0.0;
    (alpha, stable)
}

/// A reaction bundled with the quantities every solver needs from it.
#[derive(Debug, Clone)]
pub struct Environment {
    pub reaction: Reaction,
    /// Periodic state `P(t)`.
    pub state: PeriodicFn,
    /// Linearisation `a(t) = f_u(t, 0)`.
    pub linearization: PeriodicFn,
    /// `max_t P(t)`.
    pub state_max: f64,
    /// `min_t P(t)`.
    pub state_min: f64,
}

impl Environment {
    pub fn new(reaction: Reaction) -> Result<Self> {
        Self::with_settings(reaction, &OdeSettings::default())
    }

    pub fn with_settings(reaction: Reaction, settings: &OdeSettings) -> Result<Self> {
        let state = periodic_state(&reaction, settings)?;
        let linearization = reaction.linearization(settings.nodes);
        Ok(Self {
            state_max: state.max(),
            state_min: state.min(),
            reaction,
            state,
            linearization,
        })
    }

    pub fn period(&self) -> f64 {
        self.reaction.period()
    }

    /// `cbar = 2 sqrt(mean(a))`.
    pub fn cbar(&self) -> Result<f64> {
        cbar(&self.linearization)
    }
}

/// Minimal average wave speed `2 sqrt(mean(a))`.
pub fn cbar(a: &PeriodicFn) -> Result<f64> {
    let mean = a.mean();
    if mean <= 0.0 {
        return Err(Error::NonpositiveLinearization(mean));
    }
    Ok(2.0 * mean.sqrt())
}

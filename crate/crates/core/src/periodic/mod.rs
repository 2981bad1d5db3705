//! T-periodic coefficients, reactions and the periodic state.

mod func;
mod hypotheses;
mod reaction;
mod state;

pub use func::{PeriodicFn, DEFAULT_NODES, MIN_NODES};
pub use hypotheses::{
    validate_hypotheses, HypothesisCheck, HypothesisReport, BETA_MEAN_NONNEGATIVE,
    LINEARIZATION_POSITIVE, MU_POSITIVE, NEGATIVE_ABOVE_ONE, PER_CAPITA_DECREASING,
    STATE_STABLE, ZERO_IS_EQUILIBRIUM,
};
pub use reaction::{FrozenReaction, Reaction};
pub use state::{cbar, periodic_state, stability_index, Environment, OdeSettings};

/// Period average and zero-mean shape of `p`.
pub fn mean_and_shape(p: &PeriodicFn) -> (f64, PeriodicFn) {
    p.mean_and_shape()
}

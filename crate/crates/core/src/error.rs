use thiserror::Error;

/// Failure modes shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coefficient periods differ: {0} vs {1}")]
    PeriodMismatch(f64, f64),

    #[error("time-T map has no positive fixed point in (0, {upper}]")]
    NoPositivePeriodicState { upper: f64 },

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("no critical length: |mean(k)| = {kbar} >= cbar = {cbar}")]
    NoCriticalLength { kbar: f64, cbar: f64 },

    #[error("half-line flux did not stabilise up to radius {radius} (last difference {difference:e})")]
    TruncationFailure { radius: f64, difference: f64 },

    #[error("mean of the linearisation a(t) is not positive ({0})")]
    NonpositiveLinearization(f64),

    #[error("regime error: {0}")]
    RegimeError(String),

    #[error("bracket failure: {0}")]
    BracketFailure(String),

    #[error("step rejected at t = {t}: front velocity moved by {change:e} in the corrector")]
    StepRejected { t: f64, change: f64 },

    #[error("domain collapsed at t = {t}: h - g = {width}")]
    DomainCollapse { t: f64, width: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

use std::fmt;
use std::sync::Arc;

use super::PeriodicFn;
use crate::{Error, Result};

type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The nonlinearity `f(t, u)` together with its partial derivative `f_u`.
#[derive(Clone)]
pub enum Reaction {
    /// `f(t, u) = u (a(t) - b(t) u)`.
    Logistic { a: PeriodicFn, b: PeriodicFn },
    /// User supplied `f` and `f_u`.
    Custom { period: f64, label: String, f: ScalarField, f_u: ScalarField },
}

impl fmt::Debug for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Logistic { a, b } => f
                .debug_struct("Logistic")
                .field("mean_a", &a.mean())
                .field("mean_b", &b.mean())
                .finish(),
            Reaction::Custom { period, label, .. } => {
                f.debug_struct("Custom").field("period", period).field("label", label).finish()
            }
        }
    }
}

impl Reaction {
    pub fn logistic(a: PeriodicFn, b: PeriodicFn) -> Result<Self> {
        a.same_period(&b)?;
        Ok(Reaction::Logistic { a, b })
    }

    /// `f = u (a - b u)` with constant coefficients.
    pub fn homogeneous_logistic(period: f64, a: f64, b: f64) -> Self {
        Reaction::Logistic { a: PeriodicFn::constant(period, a), b: PeriodicFn::constant(period, b) }
    }

    pub fn custom(
        period: f64,
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        f_u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidInput(format!("period must be positive, got {period}")));
        }
        Ok(Reaction::Custom { period, label: label.into(), f: Arc::new(f), f_u: Arc::new(f_u) })
    }

    pub fn period(&self) -> f64 {
        match self {
            Reaction::Logistic { a, .. } => a.period(),
            Reaction::Custom { period, .. } => *period,
        }
    }

    pub fn f(&self, t: f64, u: f64) -> f64 {
        self.at(t).value(u)
    }

    pub fn f_u(&self, t: f64, u: f64) -> f64 {
        self.at(t).derivative(u)
    }

    /// The reaction with its time argument fixed; used in the inner loops of the steppers.
    pub fn at(&self, t: f64) -> FrozenReaction<'_> {
        match self {
            Reaction::Logistic { a, b } => FrozenReaction::Logistic { a: a.eval(t), b: b.eval(t) },
            Reaction::Custom { f, f_u, .. } => FrozenReaction::Custom { t, f, f_u },
        }
    }

    /// `a(t) = f_u(t, 0)` sampled on `n` nodes.
    pub fn linearization(&self, n: usize) -> PeriodicFn {
        match self {
            Reaction::Logistic { a, .. } => a.clone(),
            Reaction::Custom { period, f_u, .. } => {
                PeriodicFn::from_fn(*period, n, |t| f_u(t, 0.0)).expect("valid custom period")
            }
        }
    }
}

#[derive(Clone, Copy)]
pub enum FrozenReaction<'a> {
    Logistic { a: f64, b: f64 },
    Custom { t: f64, f: &'a ScalarField, f_u: &'a ScalarField },
}

impl FrozenReaction<'_> {
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self {
            FrozenReaction::Logistic { a, b } => u * (a - b * u),
            FrozenReaction::Custom { t, f, .. } => f(*t, u),
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            FrozenReaction::Logistic { a, b } => a - 2.0 * b * u,
            FrozenReaction::Custom { t, f_u, .. } => f_u(*t, u),
        }
    }
}

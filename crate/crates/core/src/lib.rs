//! Numerics for the Fisher-KPP equation with two Stefan-type free boundaries
//! and time-periodic advection:
//!
//! ```text
//! u_t = u_xx - beta(t) u_x + f(t, u),     g(t) < x < h(t)
//! g'(t) = -mu(t) u_x(t, g(t)),  h'(t) = -mu(t) u_x(t, h(t))
//! ```
//!
//! The crate is organised bottom-up:
//!
//! - [`periodic`]: T-periodic coefficient functions, reactions and the periodic state `P(t)`;
//! - [`eigen`]: principal periodic-parabolic eigenvalues and the critical length;
//! - [`semiwave`]: time-periodic boundary-value problems on intervals and the half line,
//!   together with their boundary-flux operators;
//! - [`critical`]: semi-wave speeds, the critical average advection `B(theta)` and the
//!   advection regime;
//! - [`fbp`]: a front-fixing solver for the free boundary problem;
//! - [`classify`]: long-time outcome detection, threshold bisection and front asymptotics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod critical;
pub mod eigen;
pub mod field;
mod error;
pub mod fbp;
pub mod linalg;
pub mod periodic;
pub mod semiwave;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

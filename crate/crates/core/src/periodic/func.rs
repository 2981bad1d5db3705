use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::linalg::solve_cyclic_constant;
use crate::{Error, Result};

/// Default number of samples per period.
pub const DEFAULT_NODES: usize = 256;
/// Smallest admissible sample count.
pub const MIN_NODES: usize = 16;

/// A T-periodic scalar function stored as uniform samples on `[0, T)` and
/// evaluated with the periodic cubic spline through them.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFn {
    period: f64,
    values: Vec<f64>,
    /// Spline second derivatives at the nodes.
    curvature: Vec<f64>,
    /// `prefix[i]` is the spline integral over `[0, t_i]`; `prefix[n]` is the period integral.
    prefix: Vec<f64>,
}

impl PeriodicFn {
    pub fn from_samples(period: f64, values: Vec<f64>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidInput(format!("period must be positive, got {period}")));
        }
        if values.len() < MIN_NODES {
            return Err(Error::InvalidInput(format!(
                "periodic function needs at least {MIN_NODES} samples, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample {bad}")));
        }
        let n = values.len();
        let h = period / n as f64;
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                6.0 * (values[(i + 1) % n] - 2.0 * values[i] + values[(i + n - 1) % n]) / (h * h)
            })
            .collect();
        let curvature = solve_cyclic_constant(1.0, 4.0, &rhs);
        let mut prefix = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for i in 0..n {
            let j = (i + 1) % n;
            acc += 0.5 * h * (values[i] + values[j]) - h * h * h / 24.0 * (curvature[i] + curvature[j]);
            prefix.push(acc);
        }
        Ok(Self { period, values, curvature, prefix })
    }

    /// Samples `f` at `n` uniform nodes.
    pub fn from_fn(period: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = period / n as f64;
        Self::from_samples(period, (0..n).map(|i| f(i as f64 * h)).collect())
    }

    pub fn constant(period: f64, value: f64) -> Self {
        Self::constant_with_nodes(period, value, DEFAULT_NODES)
    }

    pub fn constant_with_nodes(period: f64, value: f64, n: usize) -> Self {
        Self::from_samples(period, vec![value; n.max(MIN_NODES)])
            .expect("constant periodic function with valid period")
    }

    /// `mean + amp * sin(2 pi harmonic t / T)`.
    pub fn sin_offset(period: f64, mean: f64, amp: f64, harmonic: u32, n: usize) -> Result<Self> {
        Self::from_fn(period, n, |t| mean + amp * (2.0 * PI * harmonic as f64 * t / period).sin())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.values.len()).map(move |i| i as f64 * h)
    }

    /// Node index and local coordinate in `[0, 1)` for time `t` reduced mod T.
    fn locate(&self, t: f64) -> (usize, f64) {
        let (i, u, _) = self.locate_with_cycles(t);
        (i, u)
    }

    fn locate_with_cycles(&self, t: f64) -> (usize, f64, f64) {
        let n = self.values.len();
        let scaled = t / self.period;
        let mut cycles = scaled.floor();
        let s = (scaled - cycles) * n as f64;
        let i = s.floor();
        let u = s - i;
        let i = i as usize;
        if i >= n {
            cycles += 1.0;
            (0, 0.0, cycles)
        } else {
            (i, u, cycles)
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let (i, u) = self.locate(t);
        let j = (i + 1) % n;
        let h = self.spacing();
        let w = 1.0 - u;
        w * self.values[i]
            + u * self.values[j]
            + h * h / 6.0 * ((w * w * w - w) * self.curvature[i] + (u * u * u - u) * self.curvature[j])
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let n = self.values.len();
        let (i, u) = self.locate(t);
        let j = (i + 1) % n;
        let h = self.spacing();
        let w = 1.0 - u;
        (self.values[j] - self.values[i]) / h
            + h / 6.0 * (-(3.0 * w * w - 1.0) * self.curvature[i] + (3.0 * u * u - 1.0) * self.curvature[j])
    }

    /// Exact integral of the spline over one period.
    pub fn period_integral(&self) -> f64 {
        self.prefix[self.values.len()]
    }

    /// `int_0^t p(s) ds` for any real `t` (negative `t` gives minus the integral over `[t, 0]`).
    pub fn cumulative(&self, t: f64) -> f64 {
        let n = self.values.len();
        let (i, u, cycles) = self.locate_with_cycles(t);
        let j = (i + 1) % n;
        let h = self.spacing();
        let w = 1.0 - u;
        let linear = h * (self.values[i] * (u - 0.5 * u * u) + self.values[j] * 0.5 * u * u);
        let cubic = h * h * h / 6.0
            * (self.curvature[i] * (-0.25 * w.powi(4) + 0.5 * w * w - 0.25)
                + self.curvature[j] * (0.25 * u.powi(4) - 0.5 * u * u));
        cycles * self.period_integral() + self.prefix[i] + linear + cubic
    }

    /// Period average by composite Simpson on the sample grid (trapezoid for odd counts).
    pub fn mean(&self) -> f64 {
        let n = self.values.len();
        let sum: f64 = if n % 2 == 0 {
            self.values
                .iter()
                .enumerate()
                .map(|(i, v)| if i % 2 == 0 { 2.0 * v } else { 4.0 * v })
                .sum::<f64>()
                / 3.0
        } else {
            self.values.iter().sum()
        };
        sum / n as f64
    }

    pub fn shape(&self) -> PeriodicFn {
        self.mean_and_shape().1
    }

    /// Splits `p` into its period average and the zero-mean remainder.
    pub fn mean_and_shape(&self) -> (f64, PeriodicFn) {
        let mean = self.mean();
        (mean, self.map(|v| v - mean))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PeriodicFn {
        Self::from_samples(self.period, self.values.iter().map(|&v| f(v)).collect())
            .expect("mapping preserves grid validity")
    }

    /// Resamples onto `n` uniform nodes through the spline.
    pub fn resample(&self, n: usize) -> Result<PeriodicFn> {
        if n == self.values.len() {
            return Ok(self.clone());
        }
        Self::from_fn(self.period, n, |t| self.eval(t))
    }

    /// Pointwise combination; the result lives on the finer of the two grids.
    pub fn zip_with(&self, other: &PeriodicFn, f: impl Fn(f64, f64) -> f64) -> Result<PeriodicFn> {
        if (self.period - other.period).abs() > 1e-12 * self.period {
            return Err(Error::PeriodMismatch(self.period, other.period));
        }
        let n = self.values.len().max(other.values.len());
        let a = self.resample(n)?;
        let b = other.resample(n)?;
        Self::from_samples(
            self.period,
            a.values.iter().zip(&b.values).map(|(&x, &y)| f(x, y)).collect(),
        )
    }

    /// `max_i |p(t_i) - q(t_i)|` over the nodes of the finer grid.
    pub fn sup_distance(&self, other: &PeriodicFn) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| a - b)?.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> PeriodicFn {
        self.map(|v| c * v)
    }

    pub fn offset(&self, c: f64) -> PeriodicFn {
        self.map(|v| v + c)
    }

    pub fn same_period(&self, other: &PeriodicFn) -> Result<()> {
        if (self.period - other.period).abs() > 1e-12 * self.period {
            Err(Error::PeriodMismatch(self.period, other.period))
        } else {
            Ok(())
        }
    }
}

impl Add for &PeriodicFn {
    type Output = PeriodicFn;
    fn add(self, rhs: &PeriodicFn) -> PeriodicFn {
        self.zip_with(rhs, |a, b| a + b).expect("operands share a period")
    }
}

impl Sub for &PeriodicFn {
    type Output = PeriodicFn;
    fn sub(self, rhs: &PeriodicFn) -> PeriodicFn {
        self.zip_with(rhs, |a, b| a - b).expect("operands share a period")
    }
}

impl Mul for &PeriodicFn {
    type Output = PeriodicFn;
    fn mul(self, rhs: &PeriodicFn) -> PeriodicFn {
        self.zip_with(rhs, |a, b| a * b).expect("operands share a period")
    }
}

impl Neg for &PeriodicFn {
    type Output = PeriodicFn;
    fn neg(self) -> PeriodicFn {
        self.map(|v| -v)
    }
}

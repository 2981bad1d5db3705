//! Space-time fields on `[0, T] x [0, L]` sampled on uniform grids.

/// Values at `levels.len()` uniform time levels `t_j = j T / (levels.len() - 1)`, each a
/// vector over `nodes` uniform points of `[0, length]`. The first and last levels both
/// exist so the periodicity defect can be measured directly.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    period: f64,
    length: f64,
    levels: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn new(period: f64, length: f64, levels: Vec<Vec<f64>>) -> Self {
        assert!(levels.len() >= 2, "a space-time field needs at least two time levels");
        let n = levels[0].len();
        assert!(n >= 2 && levels.iter().all(|l| l.len() == n), "ragged space-time field");
        Self { period, length, levels }
    }

    pub fn zeros(period: f64, length: f64, time_levels: usize, nodes: usize) -> Self {
        Self::new(period, length, vec![vec![0.0; nodes]; time_levels.max(2)])
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> usize {
        self.levels[0].len()
    }

    pub fn time_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dz(&self) -> f64 {
        self.length / (self.nodes() - 1) as f64
    }

    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn first(&self) -> &[f64] {
        &self.levels[0]
    }

    pub fn last(&self) -> &[f64] {
        &self.levels[self.levels.len() - 1]
    }

    pub fn time_of_level(&self, j: usize) -> f64 {
        j as f64 * self.period / (self.levels.len() - 1) as f64
    }

    /// `max |field(0, .) - field(T, .)|`.
    pub fn periodicity_defect(&self) -> f64 {
        self.first().iter().zip(self.last()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn sup(&self) -> f64 {
        self.levels.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.levels.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Bilinear interpolation; `t` is reduced mod T and `z` is clamped to `[0, length]`.
    pub fn eval(&self, t: f64, z: f64) -> f64 {
        let m = self.levels.len() - 1;
        let s = (t / self.period).rem_euclid(1.0) * m as f64;
        let j = (s.floor() as usize).min(m - 1);
        let wt = s - j as f64;
        let a = self.eval_level(j, z);
        let b = self.eval_level(j + 1, z);
        (1.0 - wt) * a + wt * b
    }

    /// Linear interpolation in `z` at time level `j`.
    pub fn eval_level(&self, j: usize, z: f64) -> f64 {
        let level = &self.levels[j];
        let n = level.len() - 1;
        let s = (z / self.length).clamp(0.0, 1.0) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let w = s - i as f64;
        (1.0 - w) * level[i] + w * level[i + 1]
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.levels.iter_mut().flatten() {
            *v *= c;
        }
    }
}

/// One-sided three-point derivative at the left end of a uniform grid.
#[inline]
pub fn left_slope(values: &[f64], dz: f64) -> f64 {
    (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dz)
}

/// One-sided three-point derivative at the right end of a uniform grid.
#[inline]
pub fn right_slope(values: &[f64], dz: f64) -> f64 {
    let n = values.len() - 1;
    (3.0 * values[n] - 4.0 * values[n - 1] + values[n - 2]) / (2.0 * dz)
}

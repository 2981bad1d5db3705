//! Banded solvers used by the spline and the parabolic steppers.

/// Reusable scratch space for the Thomas algorithm.
#[derive(Debug, Clone, Default)]
pub struct Tridiagonal {
    scratch: Vec<f64>,
}

impl Tridiagonal {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` in place; the
    /// solution overwrites `rhs`. `sub[0]` and `sup[n-1]` are ignored.
    ///
    /// No pivoting: callers only pass diagonally dominant systems.
    pub fn solve(&mut self, sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
        let n = rhs.len();
        debug_assert!(sub.len() >= n && diag.len() >= n && sup.len() >= n);
        if n == 0 {
            return;
        }
        self.scratch.resize(n, 0.0);
        let c = &mut self.scratch;
        let mut denom = diag[0];
        c[0] = sup[0] / denom;
        rhs[0] /= denom;
        for i in 1..n {
            denom = diag[i] - sub[i] * c[i - 1];
            c[i] = sup[i] / denom;
            rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= c[i] * rhs[i + 1];
        }
    }
}

/// Solves a cyclic tridiagonal system with constant coefficients
/// `off x[i-1] + diag x[i] + off x[i+1] = rhs[i]` (indices mod n) via Sherman-Morrison.
pub fn solve_cyclic_constant(off: f64, diag: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    assert!(n >= 3, "cyclic system needs at least three unknowns");
    let gamma = -diag;
    let mut d = vec![diag; n];
    d[0] = diag - gamma;
    d[n - 1] = diag - off * off / gamma;
    let sub = vec![off; n];
    let sup = vec![off; n];

    let mut solver = Tridiagonal::new();
    let mut x = rhs.to_vec();
    solver.solve(&sub, &d, &sup, &mut x);

    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    solver.solve(&sub, &d, &sup, &mut u);

    let factor = (x[0] + off * x[n - 1] / gamma) / (1.0 + u[0] + off * u[n - 1] / gamma);
    for (xi, ui) in x.iter_mut().zip(&u) {
        *xi -= factor * ui;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense_product() {
        let n = 7;
        let sub: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * i as f64).collect();
        let sup: Vec<f64> = (0..n).map(|i| -0.2 + 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + i as f64).collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let mut rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = diag[i] * x_true[i];
                if i > 0 {
                    v += sub[i] * x_true[i - 1];
                }
                if i + 1 < n {
                    v += sup[i] * x_true[i + 1];
                }
                v
            })
            .collect();
        Tridiagonal::new().solve(&sub, &diag, &sup, &mut rhs);
        for (a, b) in rhs.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn cyclic_solve_residual() {
        let n = 16;
        let x_true: Vec<f64> = (0..n).map(|i| (0.7 * i as f64).cos()).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| x_true[(i + n - 1) % n] + 4.0 * x_true[i] + x_true[(i + 1) % n])
            .collect();
        let x = solve_cyclic_constant(1.0, 4.0, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}

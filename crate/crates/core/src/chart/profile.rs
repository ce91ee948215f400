//! U(n)-invariant metrics (A(s) δ + B(s) z̄ z), s = |z|², and the scalar f
//! whose vanishing is needed for Bismut holonomy in SU(n).

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use super::{HermitianChart, MetricFn};
use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct InvariantMetricProfile {
    pub a: RealFn,
    pub b: RealFn,
    /// Derivatives in s; central differences with step `h` when absent.
    pub a_prime: Option<RealFn>,
    pub b_prime: Option<RealFn>,
    pub h: f64,
}

impl InvariantMetricProfile {
    pub fn new(a: RealFn, b: RealFn) -> Self {
        InvariantMetricProfile { a, b, a_prime: None, b_prime: None, h: 1e-5 }
    }

    pub fn with_derivatives(mut self, a_prime: RealFn, b_prime: RealFn) -> Self {
        self.a_prime = Some(a_prime);
        self.b_prime = Some(b_prime);
        self
    }

    fn deriv(&self, f: &RealFn, d: &Option<RealFn>, s: f64) -> f64 {
        match d {
            Some(d) => d(s),
            None => (f(s + self.h) - f(s - self.h)) / (2.0 * self.h),
        }
    }

    /// f = (n−1)(2B − A′)/A + (log(A + sB))′.
    pub fn f(&self, n: usize, s: f64) -> Result<f64> {
        let (a, b) = ((self.a)(s), (self.b)(s));
        let (ap, bp) = (self.deriv(&self.a, &self.a_prime, s), self.deriv(&self.b, &self.b_prime, s));
        let q = a + s * b;
        if a <= 0.0 || q <= 0.0 {
            return Err(Error::Numerical(format!("profile degenerate at s = {s} (A = {a}, A + sB = {q})")));
        }
        Ok((n as f64 - 1.0) * (2.0 * b - ap) / a + (ap + b + s * bp) / q)
    }

    pub fn f_on_grid(&self, n: usize, grid: &[f64]) -> Result<Vec<f64>> {
        grid.iter().map(|&s| self.f(n, s)).collect()
    }

    /// Chart g_{αβ̄} = A δ_{αβ} + B z̄_α z_β.
    pub fn chart(&self, n: usize, h: f64) -> HermitianChart {
        let (a, b) = (self.a.clone(), self.b.clone());
        let metric: MetricFn = Arc::new(move |z: &[Complex64]| {
            let s: f64 = z.iter().map(|w| w.norm_sqr()).sum();
            let (av, bv) = (a(s), b(s));
            DMatrix::from_fn(n, n, |i, j| {
                let d = if i == j { av } else { 0.0 };
                Complex64::new(d, 0.0) + z[i].conj() * z[j] * bv
            })
        });
        HermitianChart::new(n, metric, h)
    }
}

/// Right-hand side of f = 0 for A = 1, solved for B′:
/// sB′ = −(2n−1)B − 2(n−1)sB².
pub fn flat_a_rhs(n: usize, s: f64, b: f64) -> f64 {
    let nf = n as f64;
    (-(2.0 * nf - 1.0) * b - 2.0 * (nf - 1.0) * s * b * b) / s
}

fn flat_a_rhs_db(n: usize, s: f64, b: f64) -> f64 {
    let nf = n as f64;
    (-(2.0 * nf - 1.0) - 4.0 * (nf - 1.0) * s * b) / s
}

/// Closed form B = 1/(C s^{2n−1} − s) through (s0, b0).
pub fn flat_a_exact(n: usize, s0: f64, b0: f64) -> impl Fn(f64) -> f64 {
    let k = 2 * n as i32 - 1;
    let c = (1.0 / b0 + s0) / s0.powi(k);
    move |s| 1.0 / (c * s.powi(k) - s)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileSolution {
    pub s: Vec<f64>,
    pub b: Vec<f64>,
}

/// Two-stage Gauss–Legendre (order 4, A-stable) for y′ = rhs(t, y).
pub fn gauss_legendre<F, G>(rhs: F, jac: G, t0: f64, y0: f64, t1: f64, steps: usize) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    let r3 = 3f64.sqrt();
    let c = [0.5 - r3 / 6.0, 0.5 + r3 / 6.0];
    let a = [[0.25, 0.25 - r3 / 6.0], [0.25 + r3 / 6.0, 0.25]];
    let h = (t1 - t0) / steps as f64;
    let mut ts = vec![t0];
    let mut ys = vec![y0];
    let (mut t, mut y) = (t0, y0);
    for _ in 0..steps {
        let mut k = Vector2::new(rhs(t, y), rhs(t, y));
        let mut converged = false;
        for _ in 0..50 {
            let y1 = y + h * (a[0][0] * k[0] + a[0][1] * k[1]);
            let y2 = y + h * (a[1][0] * k[0] + a[1][1] * k[1]);
            let res = Vector2::new(k[0] - rhs(t + c[0] * h, y1), k[1] - rhs(t + c[1] * h, y2));
            let (j1, j2) = (jac(t + c[0] * h, y1), jac(t + c[1] * h, y2));
            let m = Matrix2::new(1.0 - h * a[0][0] * j1, -h * a[0][1] * j1, -h * a[1][0] * j2, 1.0 - h * a[1][1] * j2);
            let dk = m.lu().solve(&res).ok_or_else(|| Error::Numerical("singular stage Jacobian".into()))?;
            k -= dk;
            if dk.amax() <= 1e-15 * (1.0 + k.amax()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!("stage iteration failed at t = {t}")));
        }
        y += h * 0.5 * (k[0] + k[1]);
        t = t0 + h * ts.len() as f64;
        if !y.is_finite() {
            return Err(Error::Numerical(format!("solution blew up near t = {t}")));
        }
        ts.push(t);
        ys.push(y);
    }
    Ok((ts, ys))
}

/// Solves f = 0 for B with A = 1 on [s0, s1].
pub fn solve_flat_a(n: usize, s0: f64, b0: f64, s1: f64, steps: usize) -> Result<ProfileSolution> {
    if s0 <= 0.0 {
        return Err(Error::InvalidInput("the profile equation is singular at s = 0".into()));
    }
    let (s, b) = gauss_legendre(|t, y| flat_a_rhs(n, t, y), |t, y| flat_a_rhs_db(n, t, y), s0, b0, s1, steps)?;
    if let Some(i) = (0..s.len()).find(|&i| 1.0 + s[i] * b[i] <= 0.0) {
        return Err(Error::Numerical(format!("A + sB vanishes near s = {}", s[i])));
    }
    Ok(ProfileSolution { s, b })
}

/// Max |f| on the interior of a uniform solution grid, with B′ from the
/// seven-point stencil.
pub fn back_substitute(n: usize, sol: &ProfileSolution) -> f64 {
    let h = sol.s[1] - sol.s[0];
    let nf = n as f64;
    (3..sol.s.len() - 3)
        .map(|i| {
            let b = &sol.b;
            let bp = (-b[i - 3] + 9.0 * b[i - 2] - 45.0 * b[i - 1] + 45.0 * b[i + 1] - 9.0 * b[i + 2] + b[i + 3]) / (60.0 * h);
            let s = sol.s[i];
            ((nf - 1.0) * 2.0 * b[i] + (b[i] + s * bp) / (1.0 + s * b[i])).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64) -> RealFn {
        Arc::new(move |_| v)
    }

    #[test]
    fn flat_and_kahler_flat_vanish() {
        let p = InvariantMetricProfile::new(constant(1.0), constant(0.0));
        assert!(p.f_on_grid(3, &[0.1, 0.5, 2.0]).unwrap().iter().all(|f| f.abs() < 1e-15));
        let p = InvariantMetricProfile::new(constant(2.5), constant(0.0));
        assert!(p.f(2, 0.7).unwrap().abs() < 1e-15);
    }

    #[test]
    fn kahler_profile_matches_calabi_expression() {
        // B = A′ gives f = (n−1)A′/A + (log(A + sA′))′
        let a: RealFn = Arc::new(|s: f64| 1.0 + s * s);
        let b: RealFn = Arc::new(|s: f64| 2.0 * s);
        let p = InvariantMetricProfile::new(a, b)
            .with_derivatives(Arc::new(|s: f64| 2.0 * s), Arc::new(|_| 2.0));
        let s = 0.6;
        let expected = 2.0 * (2.0 * s) / (1.0 + s * s) + (2.0 * s + 2.0 * s + 2.0 * s) / (1.0 + s * s + 2.0 * s * s);
        assert!((p.f(3, s).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn ode_matches_closed_form() {
        for n in [2, 3] {
            let sol = solve_flat_a(n, 1.0, 1.0, 2.0, 4000).unwrap();
            let exact = flat_a_exact(n, 1.0, 1.0);
            let err = sol.s.iter().zip(&sol.b).map(|(s, b)| (b - exact(*s)).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "n = {n}: {err}");
            let r = back_substitute(n, &sol);
            assert!(r < 1e-10, "n = {n}: {r}");
            let p = InvariantMetricProfile::new(constant(1.0), Arc::new(exact));
            assert!(p.f(n, 1.5).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn degenerate_profile_is_reported() {
        let p = InvariantMetricProfile::new(constant(1.0), constant(-1.0));
        assert!(p.f(2, 1.0).is_err());
        assert!(solve_flat_a(2, 0.0, 1.0, 1.0, 10).is_err());
    }
}

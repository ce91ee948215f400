//! Scalar systems for homogeneous G₂ structures that are only known
//! through their parameter equations, plus pointwise structures on S⁶.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::canonical::{g2_form, two_form_matrix};
use crate::error::{Error, Result};
use crate::exterior::MultiForm;

/// Residuals of the squashed S⁷ conditions −3y = λz², ½y² + z² = −½λyz².
pub fn squashed_s7_residual(lambda: f64, y: f64, z: f64) -> [f64; 2] {
    [-3.0 * y - lambda * z * z, 0.5 * y * y + z * z + 0.5 * lambda * y * z * z]
}

/// The closed-form solution (y, z) = (−3/λ, ±3/λ).
pub fn squashed_s7_solution(lambda: f64, sign: f64) -> Result<(f64, f64)> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidInput("λ must be finite and nonzero".into()));
    }
    Ok((-3.0 / lambda, sign.signum() * 3.0 / lambda))
}

/// Nearly parallel conditions on N(n,m) with metric parameters (x, y, z, f),
/// tan δ = −n/m and λ = x² + y² + z².
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AloffWallach {
    pub n: i64,
    pub m: i64,
    pub delta: f64,
}

impl AloffWallach {
    pub fn new(n: i64, m: i64) -> Result<Self> {
        if n == 0 && m == 0 {
            return Err(Error::InvalidInput("N(0,0) is not defined".into()));
        }
        let delta = if m == 0 { -std::f64::consts::FRAC_PI_2 * (n as f64).signum() } else { (-(n as f64) / m as f64).atan() };
        Ok(AloffWallach { n, m, delta })
    }

    pub fn lambda(x: f64, y: f64, z: f64) -> f64 {
        x * x + y * y + z * z
    }

    pub fn residual(&self, p: [f64; 4]) -> [f64; 3] {
        let [x, y, z, f] = p;
        let (c, s) = (self.delta.cos(), self.delta.sin());
        let r2 = 2.0 * std::f64::consts::SQRT_2;
        let lam = Self::lambda(x, y, z);
        let t = 4.0 * x * y * z;
        [
            t + r2 * f * (y * y * (c - s) + z * z * s) - lam * y * y * z * z,
            t + r2 * f * (x * x * (c - s) - z * z * c) - lam * x * x * z * z,
            t + r2 * f * (x * x * s - y * y * c) - lam * y * y * x * x,
        ]
    }

    /// Jacobian with respect to (y, z, f) at fixed x.
    fn jacobian(&self, p: [f64; 4]) -> DMatrix<f64> {
        let [x, y, z, f] = p;
        let (c, s) = (self.delta.cos(), self.delta.sin());
        let r2 = 2.0 * std::f64::consts::SQRT_2;
        let lam = Self::lambda(x, y, z);
        let (y2, z2, x2) = (y * y, z * z, x * x);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                4.0 * x * z + r2 * f * 2.0 * y * (c - s) - (2.0 * y * y2 * z2 + lam * 2.0 * y * z2),
                4.0 * x * y + r2 * f * 2.0 * z * s - (2.0 * z * y2 * z2 + lam * y2 * 2.0 * z),
                r2 * (y2 * (c - s) + z2 * s),
                4.0 * x * z - 2.0 * y * x2 * z2,
                4.0 * x * y - r2 * f * 2.0 * z * c - (2.0 * z * x2 * z2 + lam * x2 * 2.0 * z),
                r2 * (x2 * (c - s) - z2 * c),
                4.0 * x * z - r2 * f * 2.0 * y * c - (2.0 * y * y2 * x2 + lam * 2.0 * y * x2),
                4.0 * x * y - 2.0 * z * y2 * x2,
                r2 * (x2 * s - y2 * c),
            ],
        )
    }

    /// Newton iteration in (y, z, f) at fixed x.
    pub fn newton(&self, x: f64, start: [f64; 3], tol: f64, max_iter: usize) -> Option<AwRoot> {
        let mut v = DVector::from_column_slice(&start);
        for _ in 0..max_iter {
            let p = [x, v[0], v[1], v[2]];
            let r = DVector::from_column_slice(&self.residual(p));
            if r.amax() < tol {
                let jac = self.jacobian(p);
                return Some(AwRoot { params: p, residual: r.amax(), jacobian_det: jac.determinant(), lambda: Self::lambda(x, v[0], v[1]) });
            }
            let step = self.jacobian(p).lu().solve(&r)?;
            v -= step;
            if !v.iter().all(|t| t.is_finite()) || v.amax() > 1e6 {
                return None;
            }
        }
        None
    }

    /// Distinct nondegenerate roots with y, z ≠ 0 found from a deterministic
    /// grid of starting points.
    pub fn roots(&self, x: f64, tol: f64) -> Vec<AwRoot> {
        let mut found: Vec<AwRoot> = Vec::new();
        let grid = [-2.0, -1.0, -0.3, 0.3, 1.0, 2.0];
        for &y in &grid {
            for &z in &grid {
                for &f in &grid {
                    if let Some(r) = self.newton(x, [y, z, f], tol, 100) {
                        let [_, ry, rz, _] = r.params;
                        if ry.abs() < 1e-6 || rz.abs() < 1e-6 || r.jacobian_det.abs() < 1e-8 {
                            continue;
                        }
                        if !found.iter().any(|o| (0..4).all(|i| (o.params[i] - r.params[i]).abs() < 1e-7)) {
                            found.push(r);
                        }
                    }
                }
            }
        }
        found.sort_by(|a, b| a.params.partial_cmp(&b.params).unwrap());
        found
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AwRoot {
    /// (x, y, z, f)
    pub params: [f64; 4],
    pub residual: f64,
    pub jacobian_det: f64,
    pub lambda: f64,
}

/// Pointwise Kähler form on T_x S⁶ from the G₂ form: Ω = i_x φ on x^⊥, with
/// J read off from Ω. Returns (Ω as a 7-dim 2-form, J on ℝ⁷ vanishing on x).
pub fn s6_pointwise(x: &[f64]) -> Result<(MultiForm, DMatrix<f64>)> {
    if x.len() != 7 {
        return Err(Error::DimensionMismatch { expected: 7, found: x.len() });
    }
    let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("point not on the unit sphere (|x| = {norm})")));
    }
    let omega = g2_form().interior(x)?;
    // Ω_{AB} = g(e_A, J e_B) with g = I
    let j = two_form_matrix(&omega);
    Ok((omega, j))
}

/// Hopf fibre form σ³ on S³ as a 1-form.
pub fn hopf_form() -> MultiForm {
    MultiForm::basis(3, &[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squashed_solution_is_exact() {
        for lambda in [-3.0, -1.0, 0.5, 2.0, 7.0] {
            for sign in [1.0, -1.0] {
                let (y, z) = squashed_s7_solution(lambda, sign).unwrap();
                let r = squashed_s7_residual(lambda, y, z);
                assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12, "{lambda}: {r:?}");
            }
        }
        assert!(squashed_s7_solution(0.0, 1.0).is_err());
    }

    #[test]
    fn aloff_wallach_roots() {
        let aw = AloffWallach::new(1, 1).unwrap();
        assert!((aw.delta + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let roots = aw.roots(1.0, 1e-12);
        assert!(!roots.is_empty());
        for r in &roots {
            assert!(r.residual < 1e-10);
            assert!(aw.residual(r.params).iter().all(|t| t.abs() < 1e-10));
        }
    }

    #[test]
    fn aloff_wallach_jacobian_matches_fd() {
        let aw = AloffWallach::new(1, 2).unwrap();
        let p = [0.7, 1.1, -0.4, 0.9];
        let jac = aw.jacobian(p);
        let h = 1e-6;
        for k in 0..3 {
            let mut pp = p;
            let mut pm = p;
            pp[k + 1] += h;
            pm[k + 1] -= h;
            let (rp, rm) = (aw.residual(pp), aw.residual(pm));
            for i in 0..3 {
                assert!(((rp[i] - rm[i]) / (2.0 * h) - jac[(i, k)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn s6_structure_is_complex_on_tangent_space() {
        let x = [0.0, 0.6, 0.0, 0.0, 0.8, 0.0, 0.0];
        let (_, j) = s6_pointwise(&x).unwrap();
        let xv = DVector::from_column_slice(&x);
        let p = DMatrix::identity(7, 7) - &xv * xv.transpose();
        let j2 = &j * &j;
        assert!((&j2 + &p).abs().max() < 1e-14);
        assert!((&j * &xv).amax() < 1e-15);
        assert!(s6_pointwise(&[1.0; 7]).is_err());
    }
}

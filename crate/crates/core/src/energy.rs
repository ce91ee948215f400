//! E(D) = Vol(D) − ∫_D β on parametrized patches in flat ℝⁿ, and the second
//! variation of E along calibrated families.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::MultiForm;
use crate::linalg::compensated_sum;

/// X(u, t): parameter point and family parameter to a point of ℝⁿ.
pub type FamilyMap = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

pub const DEFAULT_ORDER: usize = 8;
const GRAM_FLOOR: f64 = 1e-14;

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_m and P_{m−1}
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 0 { 1.0 } else if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

#[derive(Clone)]
pub struct ImmersedPatch {
    pub k: usize,
    pub n: usize,
    pub map: FamilyMap,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub order: usize,
    /// Step for parameter derivatives (fourth-order central differences).
    pub step: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondVariationReport {
    pub energy_at_zero: f64,
    pub first_variation: f64,
    pub numeric: f64,
    pub formula: f64,
    pub residual: f64,
}

fn d4<F: Fn(f64) -> Vec<f64>>(f: F, h: f64) -> Vec<f64> {
    let (a, b, c, d) = (f(-2.0 * h), f(-h), f(h), f(2.0 * h));
    (0..a.len()).map(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h)).collect()
}

impl ImmersedPatch {
    pub fn new(k: usize, n: usize, map: FamilyMap, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != k || hi.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: lo.len().min(hi.len()) });
        }
        if k > n {
            return Err(Error::InvalidInput(format!("a {k}-patch cannot sit in ℝ^{n}")));
        }
        Ok(ImmersedPatch { k, n, map, lo, hi, order: DEFAULT_ORDER, step: 1e-3 })
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    /// Tensor-product nodes and weights on the parameter box.
    pub fn quadrature(&self) -> Vec<(Vec<f64>, f64)> {
        let (x, w) = gauss_legendre(self.order);
        let mut out = vec![(Vec::new(), 1.0)];
        for d in 0..self.k {
            let half = 0.5 * (self.hi[d] - self.lo[d]);
            let mid = 0.5 * (self.hi[d] + self.lo[d]);
            out = out
                .into_iter()
                .flat_map(|(p, pw)| {
                    x.iter().zip(&w).map(move |(xi, wi)| {
                        let mut q = p.clone();
                        q.push(mid + half * xi);
                        (q, pw * wi * half)
                    })
                })
                .collect();
        }
        out
    }

    fn point(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        let x = (self.map)(u, t);
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        Ok(x)
    }

    /// Columns ∂X/∂u^α at (u, t).
    pub fn tangents(&self, u: &[f64], t: f64) -> Result<DMatrix<f64>> {
        self.point(u, t)?;
        let mut m = DMatrix::zeros(self.n, self.k);
        for a in 0..self.k {
            let col = d4(
                |s| {
                    let mut v = u.to_vec();
                    v[a] += s;
                    (self.map)(&v, t)
                },
                self.step,
            );
            for i in 0..self.n {
                m[(i, a)] = col[i];
            }
        }
        Ok(m)
    }

    fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        if self.k == 0 || self.lo.iter().zip(&self.hi).any(|(a, b)| a == b) {
            return Ok(0.0);
        }
        let vals: Vec<f64> = self.quadrature().par_iter().map(|(u, w)| Ok(w * f(u)?)).collect::<Result<_>>()?;
        Ok(compensated_sum(vals))
    }

    fn gram_volume(&self, t: &DMatrix<f64>) -> Result<f64> {
        let det = (t.transpose() * t).determinant();
        if det <= GRAM_FLOOR {
            return Err(Error::Numerical(format!("degenerate Gram determinant {det:e}")));
        }
        Ok(det.sqrt())
    }

    pub fn volume(&self, t: f64) -> Result<f64> {
        self.integrate(|u| self.gram_volume(&self.tangents(u, t)?))
    }

    pub fn integral(&self, form: &MultiForm, t: f64) -> Result<f64> {
        self.check_form(form)?;
        self.integrate(|u| form.evaluate(&self.tangents(u, t)?))
    }

    fn check_form(&self, form: &MultiForm) -> Result<()> {
        if form.degree() != self.k {
            return Err(Error::DegreeMismatch { expected: self.k, found: form.degree() });
        }
        if form.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: form.dim() });
        }
        Ok(())
    }

    /// E = Vol − ∫β at family parameter t.
    pub fn energy(&self, form: &MultiForm, t: f64) -> Result<f64> {
        self.check_form(form)?;
        self.integrate(|u| {
            let tan = self.tangents(u, t)?;
            Ok(self.gram_volume(&tan)? - form.evaluate(&tan)?)
        })
    }

    /// (dE/dt, d²E/dt²) at t = 0 by five-point differences with step `dt`.
    pub fn numeric_variations(&self, form: &MultiForm, dt: f64) -> Result<(f64, f64, f64)> {
        let e: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|s| self.energy(form, s * dt)).collect::<Result<_>>()?;
        let first = (e[0] - 8.0 * e[1] + 8.0 * e[3] - e[4]) / (12.0 * dt);
        let second = (-e[0] + 16.0 * e[1] - 30.0 * e[2] + 16.0 * e[3] - e[4]) / (12.0 * dt * dt);
        Ok((e[2], first, second))
    }

    /// ∫_X |∇^⊥V|² − i_{∇^⊥V} i_{∇^⊥V} φ over the t = 0 patch, with V = ∂_t X
    /// and i_K φ(X_1, …, X_k) = Σ_a φ(…, K X_a, …).
    pub fn second_variation_formula(&self, form: &MultiForm) -> Result<f64> {
        self.check_form(form)?;
        let k = self.k;
        self.integrate(|u| {
            let tan = self.tangents(u, 0.0)?;
            let qr = tan.clone().qr();
            let (e, r) = (qr.q(), qr.r());
            let rinv = r.clone().try_inverse().ok_or_else(|| Error::Numerical("degenerate tangent frame".into()))?;
            let proj = DMatrix::identity(self.n, self.n) - &e * e.transpose();
            // D[:, α] = ∂_{u^α} ∂_t X
            let mut d = DMatrix::zeros(self.n, k);
            for a in 0..k {
                let col = d4(
                    |s| {
                        let mut v = u.to_vec();
                        v[a] += s;
                        d4(|t| (self.map)(&v, t), self.step)
                    },
                    self.step,
                );
                for i in 0..self.n {
                    d[(i, a)] = col[i];
                }
            }
            let w = &proj * (d * &rinv);
            let mut sq = w.norm_squared();
            for a in 0..k {
                for b in 0..k {
                    if a == b {
                        continue;
                    }
                    let mut slots = e.clone();
                    slots.set_column(a, &w.column(a));
                    slots.set_column(b, &w.column(b));
                    sq -= form.evaluate(&slots)?;
                }
            }
            Ok(sq * r.determinant().abs())
        })
    }

    /// Compares the finite-difference d²E/dt² with the formula; the t = 0
    /// member must be calibrated (E and dE/dt below `tol`).
    pub fn second_variation_check(&self, form: &MultiForm, dt: f64, tol: f64) -> Result<SecondVariationReport> {
        let (e0, first, numeric) = self.numeric_variations(form, dt)?;
        let pre = e0.abs().max(first.abs());
        if pre > tol {
            return Err(Error::Precondition { what: "family is not calibrated at t = 0".into(), residual: pre });
        }
        let formula = self.second_variation_formula(form)?;
        Ok(SecondVariationReport { energy_at_zero: e0, first_variation: first, numeric, formula, residual: (numeric - formula).abs() })
    }
}

/// Rotation family exp(tA) applied to the affine plane p + u^a v_a.
pub fn rotation_family(a: DMatrix<f64>, base: Vec<f64>, span: DMatrix<f64>) -> FamilyMap {
    Arc::new(move |u: &[f64], t: f64| {
        let rot = crate::linalg::expm(&(&a * t));
        let mut x = nalgebra::DVector::from_column_slice(&base);
        for (i, ui) in u.iter().enumerate() {
            x += span.column(i) * *ui;
        }
        (rot * x).iter().copied().collect()
    })
}

/// X(u, t) = p + u^a v_a + t·V(u) with V(u) = M u + c.
pub fn linear_normal_family(span: DMatrix<f64>, m: DMatrix<f64>, c: Vec<f64>) -> FamilyMap {
    Arc::new(move |u: &[f64], t: f64| {
        let uu = nalgebra::DVector::from_column_slice(u);
        let x = &span * &uu + (&m * &uu + nalgebra::DVector::from_column_slice(&c)) * t;
        x.iter().copied().collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{build_special_unitary, build_unitary};

    fn unit_square() -> (Vec<f64>, Vec<f64>) {
        (vec![0.0, 0.0], vec![1.0, 1.0])
    }

    fn plane(n: usize, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(n, cols.len(), |i, j| if i == cols[j] { 1.0 } else { 0.0 })
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        for p in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn complex_and_lagrangian_squares() {
        let om = build_unitary(2).unwrap().form("Omega").unwrap().clone();
        let (lo, hi) = unit_square();
        let complex = ImmersedPatch::new(2, 4, linear_normal_family(plane(4, &[0, 2]), DMatrix::zeros(4, 2), vec![0.0; 4]), lo.clone(), hi.clone()).unwrap();
        assert!(complex.energy(&om, 0.0).unwrap().abs() < 1e-12);
        let lag = ImmersedPatch::new(2, 4, linear_normal_family(plane(4, &[0, 1]), DMatrix::zeros(4, 2), vec![0.0; 4]), lo, hi).unwrap();
        assert!((lag.energy(&om, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_patch_has_zero_energy() {
        let om = build_unitary(2).unwrap().form("Omega").unwrap().clone();
        let p = ImmersedPatch::new(2, 4, linear_normal_family(plane(4, &[0, 2]), DMatrix::zeros(4, 2), vec![0.0; 4]), vec![0.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(p.energy(&om, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn second_variation_of_a_tilted_complex_line() {
        let om = build_unitary(2).unwrap().form("Omega").unwrap().clone();
        let (lo, hi) = unit_square();
        // rotate x1 towards x2 only: E(t) = 1 − cos t per unit area
        let mut a = DMatrix::zeros(4, 4);
        a[(1, 0)] = 1.0;
        a[(0, 1)] = -1.0;
        let p = ImmersedPatch::new(2, 4, rotation_family(a, vec![0.0; 4], plane(4, &[0, 2])), lo, hi).unwrap();
        let r = p.second_variation_check(&om, 1e-2, 1e-6).unwrap();
        assert!((r.numeric - 1.0).abs() < 1e-4 && (r.formula - 1.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn slag_plane_under_linear_normal_field() {
        let s = build_special_unitary(3).unwrap();
        let re = s.form("Re_psi").unwrap().clone();
        let span = plane(6, &[0, 1, 2]);
        let mut m = DMatrix::zeros(6, 3);
        m[(3, 0)] = 0.4;
        m[(4, 1)] = -0.2;
        m[(5, 0)] = 0.3;
        m[(3, 2)] = 0.3;
        m[(4, 2)] = 0.5;
        let p = ImmersedPatch::new(3, 6, linear_normal_family(span, m, vec![0.0; 6]), vec![0.0; 3], vec![1.0; 3]).unwrap();
        let r = p.second_variation_check(&re, 1e-2, 1e-6).unwrap();
        assert!(r.residual < 1e-4 && r.numeric > -1e-6, "{r:?}");
    }

    #[test]
    fn translation_has_no_second_variation() {
        let om = build_unitary(2).unwrap().form("Omega").unwrap().clone();
        let (lo, hi) = unit_square();
        let p = ImmersedPatch::new(2, 4, linear_normal_family(plane(4, &[0, 2]), DMatrix::zeros(4, 2), vec![0.0, 1.0, 0.0, 2.0]), lo, hi).unwrap();
        let r = p.second_variation_check(&om, 1e-2, 1e-6).unwrap();
        assert!(r.numeric.abs() < 1e-8 && r.formula.abs() < 1e-10);
    }

    #[test]
    fn non_calibrated_family_rejected() {
        let om = build_unitary(2).unwrap().form("Omega").unwrap().clone();
        let (lo, hi) = unit_square();
        let p = ImmersedPatch::new(2, 4, linear_normal_family(plane(4, &[0, 1]), DMatrix::zeros(4, 2), vec![0.0; 4]), lo, hi).unwrap();
        assert!(p.second_variation_check(&om, 1e-2, 1e-6).is_err());
        assert!(p.energy(&MultiForm::basis(4, &[0]), 0.0).is_err());
    }
}

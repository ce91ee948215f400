//! Hermitian metrics on coordinate charts of ℂⁿ: Lee form, Chern and Bismut
//! Ricci forms by central differences, and conformal rescalings.
//!
//! The metric is the matrix G[(α, β)] = g_{αβ̄}. With z = x + iy,
//! ∂_α = ½(∂_x − i∂_y) and ∂_ᾱ = ½(∂_x + i∂_y). Ricci components are
//! returned as matrices M[(β, α)] holding iρ_{β̄α} (the (1,1) part) or
//! iρ_{βα} (the (2,0) part).

pub mod poly;
pub mod profile;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use poly::{Poly, PolyTerm};

pub type C = Complex64;
pub type MetricFn = Arc<dyn Fn(&[C]) -> DMatrix<C> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[C]) -> f64 + Send + Sync>;

pub const DEFAULT_STEP: f64 = 1e-4;
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct HermitianChart {
    pub n: usize,
    metric: MetricFn,
    pub h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    Holo,
    Anti,
}

pub fn max_entry(m: &DMatrix<C>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

impl HermitianChart {
    pub fn new(n: usize, metric: MetricFn, h: f64) -> Self {
        HermitianChart { n, metric, h }
    }

    pub fn with_step(&self, h: f64) -> Self {
        HermitianChart { h, ..self.clone() }
    }

    /// g_{αβ̄}(z), checked hermitian positive-definite.
    pub fn metric_at(&self, z: &[C]) -> Result<DMatrix<C>> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: z.len() });
        }
        let g = (self.metric)(z);
        if g.nrows() != self.n || g.ncols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: g.nrows() });
        }
        let skew = max_entry(&(&g - g.adjoint()));
        if skew > HERMITIAN_TOL * (1.0 + max_entry(&g)) {
            return Err(Error::InvalidInput(format!("metric not hermitian at {z:?} (defect {skew:e})")));
        }
        let herm = (&g + g.adjoint()) * C::new(0.5, 0.0);
        if herm.symmetric_eigenvalues().min() <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(g)
    }

    fn inverse_at(&self, z: &[C]) -> Result<(DMatrix<C>, DMatrix<C>)> {
        let g = self.metric_at(z)?;
        let inv = g.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
        Ok((g, inv))
    }

    /// e^{f} g.
    pub fn conformal(&self, f: ScalarFn) -> HermitianChart {
        let metric = self.metric.clone();
        HermitianChart {
            n: self.n,
            metric: Arc::new(move |z: &[C]| metric(z) * C::new(f(z).exp(), 0.0)),
            h: self.h,
        }
    }

    /// Central-difference ∂_α or ∂_ᾱ of a matrix-valued function.
    fn partial<F>(&self, f: &F, z: &[C], alpha: usize, dir: Dir) -> Result<DMatrix<C>>
    where
        F: Fn(&[C]) -> Result<DMatrix<C>>,
    {
        let h = self.h;
        let at = |d: C| {
            let mut w = z.to_vec();
            w[alpha] += d;
            f(&w)
        };
        let dx = (at(C::new(h, 0.0))? - at(C::new(-h, 0.0))?) / C::new(2.0 * h, 0.0);
        let dy = (at(C::new(0.0, h))? - at(C::new(0.0, -h))?) / C::new(2.0 * h, 0.0);
        let i = C::i();
        Ok(match dir {
            Dir::Holo => (dx - dy * i) * C::new(0.5, 0.0),
            Dir::Anti => (dx + dy * i) * C::new(0.5, 0.0),
        })
    }

    fn metric_result(&self) -> impl Fn(&[C]) -> Result<DMatrix<C>> + '_ {
        move |z: &[C]| self.metric_at(z)
    }

    /// ∂_α log det g as a column, computed as tr(g⁻¹ ∂_α g).
    fn log_det_gradient(&self, z: &[C]) -> Result<DMatrix<C>> {
        let (_, inv) = self.inverse_at(z)?;
        let mut out = DMatrix::zeros(self.n, 1);
        for a in 0..self.n {
            let dg = self.partial(&self.metric_result(), z, a, Dir::Holo)?;
            out[a] = (&inv * dg).trace();
        }
        Ok(out)
    }

    /// P_α = g^{γ̄σ} ∂_σ g_{αγ̄}.
    fn p_vector(&self, z: &[C]) -> Result<DMatrix<C>> {
        let (_, inv) = self.inverse_at(z)?;
        let dgs: Vec<DMatrix<C>> = (0..self.n).map(|s| self.partial(&self.metric_result(), z, s, Dir::Holo)).collect::<Result<_>>()?;
        let mut out = DMatrix::zeros(self.n, 1);
        for a in 0..self.n {
            let mut acc = C::new(0.0, 0.0);
            for (s, dg) in dgs.iter().enumerate() {
                for g in 0..self.n {
                    acc += inv[(g, s)] * dg[(a, g)];
                }
            }
            out[a] = acc;
        }
        Ok(out)
    }

    /// θ_α = g^{β γ̄}(∂_α g_{βγ̄} − ∂_β g_{αγ̄}) = ∂_α log det g − P_α.
    pub fn lee_form(&self, z: &[C]) -> Result<Vec<C>> {
        let l = self.log_det_gradient(z)?;
        let p = self.p_vector(z)?;
        Ok((0..self.n).map(|a| l[a] - p[a]).collect())
    }

    fn lee_column(&self, z: &[C]) -> Result<DMatrix<C>> {
        Ok(DMatrix::from_column_slice(self.n, 1, &self.lee_form(z)?))
    }

    /// ∂_β̄ applied to a column-valued function v_α: returns M[(β, α)].
    fn anti_jacobian<F>(&self, v: &F, z: &[C]) -> Result<DMatrix<C>>
    where
        F: Fn(&[C]) -> Result<DMatrix<C>>,
    {
        let mut m = DMatrix::zeros(self.n, self.n);
        for b in 0..self.n {
            let d = self.partial(v, z, b, Dir::Anti)?;
            for a in 0..self.n {
                m[(b, a)] = d[a];
            }
        }
        Ok(m)
    }

    fn holo_jacobian<F>(&self, v: &F, z: &[C]) -> Result<DMatrix<C>>
    where
        F: Fn(&[C]) -> Result<DMatrix<C>>,
    {
        let mut m = DMatrix::zeros(self.n, self.n);
        for b in 0..self.n {
            let d = self.partial(v, z, b, Dir::Holo)?;
            for a in 0..self.n {
                m[(b, a)] = d[a];
            }
        }
        Ok(m)
    }

    /// iρ^c_{β̄α} = ∂_β̄ ∂_α log det g.
    pub fn chern_ricci(&self, z: &[C]) -> Result<DMatrix<C>> {
        self.anti_jacobian(&|w: &[C]| self.log_det_gradient(w), z)
    }

    /// Bismut Ricci form: the (1,1) part transcribed term by term, and the
    /// (2,0) part ∂_βθ_α − ∂_αθ_β.
    pub fn bismut_ricci(&self, z: &[C]) -> Result<BismutRicci> {
        let n = self.n;
        // first term: ∂_β̄ P_α
        let t1 = self.anti_jacobian(&|w: &[C]| self.p_vector(w), z)?;
        // second: ∂_α of the column Q_β̄ = ∂_β̄ log det g
        let q = |w: &[C]| -> Result<DMatrix<C>> { Ok(self.log_det_gradient(w)?.map(|v| v.conj())) };
        let t2 = self.holo_jacobian(&q, z)?.transpose();
        // third: ∂_α of R_β̄ = g^{γ̄σ} ∂_γ̄ g_{σβ̄}, which is the conjugate of P_β
        let r = |w: &[C]| -> Result<DMatrix<C>> { Ok(self.p_vector(w)?.map(|v| v.conj())) };
        let t3 = self.holo_jacobian(&r, z)?.transpose();
        let rho11 = t1 - t2 + t3;
        let dtheta = self.holo_jacobian(&|w: &[C]| self.lee_column(w), z)?;
        let rho20 = DMatrix::from_fn(n, n, |b, a| dtheta[(b, a)] - dtheta[(a, b)]);
        Ok(BismutRicci { rho11, rho20 })
    }

    /// ∂_β̄θ_α + ∂_αθ_β̄ as M[(β, α)].
    fn lee_symmetric_derivative(&self, z: &[C]) -> Result<DMatrix<C>> {
        let dbar = self.anti_jacobian(&|w: &[C]| self.lee_column(w), z)?;
        let conj = |w: &[C]| -> Result<DMatrix<C>> { Ok(self.lee_column(w)?.map(|v| v.conj())) };
        let d = self.holo_jacobian(&conj, z)?.transpose();
        Ok(dbar + d)
    }

    /// Max entry of iρ^c − iρ^b − (∂_β̄θ_α + ∂_αθ_β̄) on the (1,1) part.
    /// With one step for every term the stencils cancel to roundoff.
    pub fn ricci_relation_residual(&self, z: &[C]) -> Result<f64> {
        let b = self.bismut_ricci(z)?;
        Ok(max_entry(&(self.bismut_from_chern(z)? - b.rho11)))
    }

    /// iρ^c − (∂_β̄θ_α + ∂_αθ_β̄), the Bismut (1,1) form predicted from the
    /// Chern Ricci form and the Lee form.
    pub fn bismut_from_chern(&self, z: &[C]) -> Result<DMatrix<C>> {
        Ok(self.chern_ricci(z)? - self.lee_symmetric_derivative(z)?)
    }

    /// ∂_β̄∂_α f as M[(β, α)].
    pub fn ddbar(&self, f: &ScalarFn, z: &[C]) -> Result<DMatrix<C>> {
        let grad = |w: &[C]| -> Result<DMatrix<C>> {
            let sf = |u: &[C]| -> Result<DMatrix<C>> { Ok(DMatrix::from_element(1, 1, C::new(f(u), 0.0))) };
            let mut col = DMatrix::zeros(self.n, 1);
            for a in 0..self.n {
                col[a] = self.partial(&sf, w, a, Dir::Holo)?[0];
            }
            Ok(col)
        };
        self.anti_jacobian(&grad, z)
    }

    /// Residuals of the conformal-change rule for g̃ = e^f g:
    /// ((1,1) part against (2 − n)∂_β̄∂_α f, (2,0) part unchanged).
    pub fn conformal_lemma_residual(&self, f: &ScalarFn, z: &[C]) -> Result<(f64, f64)> {
        let tilde = self.conformal(f.clone());
        let (b, bt) = (self.bismut_ricci(z)?, tilde.bismut_ricci(z)?);
        let shift = self.ddbar(f, z)? * C::new(2.0 - self.n as f64, 0.0);
        Ok((max_entry(&(bt.rho11 - b.rho11 - shift)), max_entry(&(bt.rho20 - b.rho20))))
    }

    /// g̃ = e^{h/n} g, after checking iρ^c_{β̄α} = −∂_β̄∂_α h at the samples.
    pub fn chern_flatten(&self, h: ScalarFn, samples: &[Vec<C>], tol: f64) -> Result<(HermitianChart, FlattenReport)> {
        let pre = samples
            .par_iter()
            .map(|z| Ok(max_entry(&(self.chern_ricci(z)? + self.ddbar(&h, z)?))))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if pre > tol {
            return Err(Error::Precondition { what: "Chern Ricci form is not i∂∂̄h".into(), residual: pre });
        }
        let n = self.n as f64;
        let hh = h.clone();
        let out = self.conformal(Arc::new(move |z: &[C]| hh(z) / n));
        let post = samples
            .par_iter()
            .map(|z| Ok(max_entry(&out.chern_ricci(z)?)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok((out, FlattenReport { precondition_residual: pre, exponent: "h/n".into(), residuals: vec![("h/n".into(), post)] }))
    }

    /// Conformal rescaling making the Bismut Ricci form vanish, with the
    /// exponent chosen among f/(2−n) and f/(n−2) by the residual it leaves.
    pub fn bismut_flatten(&self, f: ScalarFn, samples: &[Vec<C>], tol: f64) -> Result<(HermitianChart, FlattenReport)> {
        if self.n < 3 {
            return Err(Error::InvalidInput("Bismut flattening needs n ≥ 3".into()));
        }
        let pre = samples
            .par_iter()
            .map(|z| {
                let b = self.bismut_ricci(z)?;
                Ok(max_entry(&(b.rho11 + self.ddbar(&f, z)?)).max(max_entry(&b.rho20)))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if pre > tol {
            return Err(Error::Precondition { what: "Bismut Ricci form is not i∂∂̄f of type (1,1)".into(), residual: pre });
        }
        let n = self.n as f64;
        let candidates = [("f/(2-n)", 1.0 / (2.0 - n)), ("f/(n-2)", 1.0 / (n - 2.0))];
        let mut residuals = Vec::new();
        let mut best: Option<(usize, HermitianChart, f64)> = None;
        for (k, (label, factor)) in candidates.iter().enumerate() {
            let ff = f.clone();
            let factor = *factor;
            let chart = self.conformal(Arc::new(move |z: &[C]| factor * ff(z)));
            let r = samples
                .par_iter()
                .map(|z| {
                    let b = chart.bismut_ricci(z)?;
                    Ok(max_entry(&b.rho11).max(max_entry(&b.rho20)))
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            residuals.push((label.to_string(), r));
            if r <= tol && best.as_ref().map(|b| r < b.2).unwrap_or(true) {
                best = Some((k, chart, r));
            }
        }
        match best {
            Some((k, chart, _)) => Ok((chart, FlattenReport { precondition_residual: pre, exponent: candidates[k].0.into(), residuals })),
            None => Err(Error::Numerical(format!("no conformal exponent flattens ρ^b: {residuals:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BismutRicci {
    pub rho11: DMatrix<C>,
    pub rho20: DMatrix<C>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlattenReport {
    pub precondition_residual: f64,
    pub exponent: String,
    pub residuals: Vec<(String, f64)>,
}

/// (4 q(h/2) − q(h)) / 3 for a quantity with an h² error term.
pub fn richardson<F>(q: F, h: f64) -> Result<DMatrix<C>>
where
    F: Fn(f64) -> Result<DMatrix<C>>,
{
    let (a, b) = (q(h)?, q(h / 2.0)?);
    Ok((b * C::new(4.0, 0.0) - a) / C::new(3.0, 0.0))
}

/// Flat metric.
pub fn flat_chart(n: usize) -> HermitianChart {
    HermitianChart::new(n, Arc::new(move |_z: &[C]| DMatrix::identity(n, n)), DEFAULT_STEP)
}

/// Kähler metric g_{αβ̄} = ∂_α∂_β̄ K of a real potential, returned with the
/// exact metric polynomials.
pub fn kahler_chart(potential: &Poly) -> (HermitianChart, Vec<Vec<Poly>>) {
    let n = potential.dim();
    let entries: Vec<Vec<Poly>> = (0..n).map(|a| (0..n).map(|b| potential.dz(a).dzbar(b)).collect()).collect();
    let e = entries.clone();
    let chart = HermitianChart::new(n, Arc::new(move |z: &[C]| DMatrix::from_fn(n, n, |a, b| e[a][b].eval(z))), DEFAULT_STEP);
    (chart, entries)
}

/// |z|² plus a seeded real polynomial, scaled so that ∂∂̄K stays positive on
/// the unit polydisc.
pub fn random_kahler_potential(n: usize, seed: u64, label: &str) -> Poly {
    let p = Poly::random_real(n, 4, 6, 1.0, seed, label);
    // the Hessian entries of a degree-4 term are bounded by 16·|c| on the polydisc
    let bound: f64 = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| p.dz(a).dzbar(b).coefficient_bound()).fold(0.0, f64::max);
    let eps = if bound > 0.0 { 0.4 / (bound * n as f64) } else { 0.0 };
    &Poly::norm_squared(n) + &p.scaled(C::new(eps, 0.0))
}

/// e^{f}·Id for a real polynomial f.
pub fn conformally_flat_chart(f: Poly) -> HermitianChart {
    let n = f.dim();
    HermitianChart::new(n, Arc::new(move |z: &[C]| DMatrix::identity(n, n) * C::new(f.eval(z).re.exp(), 0.0)), DEFAULT_STEP)
}

/// g = Σ αᵢ ⊗ ᾱᵢ with α = (dz₁, dz₂, dz₃ − z₁dz₂).
pub fn iwasawa_chart() -> HermitianChart {
    HermitianChart::new(
        3,
        Arc::new(|z: &[C]| {
            let mut a = DMatrix::<C>::identity(3, 3);
            a[(2, 1)] = -z[0];
            a.transpose() * a.map(|v| v.conj())
        }),
        DEFAULT_STEP,
    )
}

/// Serializable polynomial metric: Id + M + M^†, with M[(row, col)] given as
/// polynomial terms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyChartSpec {
    pub n: usize,
    pub entries: Vec<PolyEntry>,
    #[serde(default = "default_step")]
    pub fd_step: f64,
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyEntry {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<PolyTerm>,
}

impl PolyChartSpec {
    /// Seeded non-Kähler test metric, clamped so that Gershgorin keeps it
    /// positive-definite on the unit polydisc.
    pub fn random(n: usize, seed: u64, label: &str) -> Self {
        let mut r = rng::stream(seed, rng::label_id(label));
        let mut entries = Vec::new();
        for row in 0..n {
            for col in 0..n {
                let p = Poly::random_real(n, 3, 3, 1.0, rng::uniform(&mut r, 0.0, 1e9) as u64, label);
                let scale = 0.2 / (n as f64 * p.coefficient_bound().max(1e-12));
                entries.push(PolyEntry { row, col, terms: p.scaled(C::new(scale, 0.0)).to_terms() });
            }
        }
        PolyChartSpec { n, entries, fd_step: DEFAULT_STEP }
    }

    pub fn chart(&self) -> Result<HermitianChart> {
        let n = self.n;
        let mut m: Vec<Vec<Poly>> = vec![vec![Poly::zero(n); n]; n];
        for e in &self.entries {
            if e.row >= n || e.col >= n {
                return Err(Error::InvalidInput(format!("entry ({}, {}) outside a {n}×{n} metric", e.row, e.col)));
            }
            m[e.row][e.col] = &m[e.row][e.col] + &Poly::from_terms(n, &e.terms)?;
        }
        Ok(HermitianChart::new(
            n,
            Arc::new(move |z: &[C]| {
                let mm = DMatrix::from_fn(n, n, |a, b| m[a][b].eval(z));
                DMatrix::identity(n, n) + &mm + mm.adjoint()
            }),
            self.fd_step,
        ))
    }
}

/// Seeded points in the polydisc of radius `radius`.
pub fn sample_points(n: usize, count: usize, radius: f64, seed: u64, label: &str) -> Vec<Vec<C>> {
    let mut r = rng::stream(seed, rng::label_id(label));
    let s = radius / std::f64::consts::SQRT_2;
    (0..count).map(|_| (0..n).map(|_| C::new(rng::uniform(&mut r, -s, s), rng::uniform(&mut r, -s, s))).collect()).collect()
}

pub fn poly_scalar(p: Poly) -> ScalarFn {
    Arc::new(move |z: &[C]| p.eval(z).re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z3() -> Vec<C> {
        vec![C::new(0.21, -0.13), C::new(-0.3, 0.05), C::new(0.1, 0.27)]
    }

    #[test]
    fn flat_chart_is_flat() {
        let c = flat_chart(3);
        let z = z3();
        assert!(c.lee_form(&z).unwrap().iter().all(|t| t.norm() < 1e-14));
        assert!(max_entry(&c.chern_ricci(&z).unwrap()) < 1e-12);
        let b = c.bismut_ricci(&z).unwrap();
        assert!(max_entry(&b.rho11) < 1e-12 && max_entry(&b.rho20) < 1e-12);
    }

    #[test]
    fn kahler_charts_are_balanced() {
        for seed in 0..3 {
            let k = random_kahler_potential(3, seed, "kahler");
            let (c, _) = kahler_chart(&k);
            let z = z3();
            assert!(c.lee_form(&z).unwrap().iter().all(|t| t.norm() < 1e-7), "seed {seed}");
            let b = c.bismut_ricci(&z).unwrap();
            assert!(max_entry(&(b.rho11 - c.chern_ricci(&z).unwrap())) < 1e-5);
        }
    }

    #[test]
    fn conformally_flat_lee_form() {
        let f = Poly::random_real(3, 3, 5, 0.5, 11, "conf");
        let c = conformally_flat_chart(f.clone());
        let z = z3();
        let theta = c.lee_form(&z).unwrap();
        for a in 0..3 {
            let exact = f.dz(a).eval(&z) * 2.0;
            assert!((theta[a] - exact).norm() < 1e-7);
        }
        // iρ^c = n ∂∂̄f
        let rc = c.chern_ricci(&z).unwrap();
        for b in 0..3 {
            for a in 0..3 {
                assert!((rc[(b, a)] - f.dz(a).dzbar(b).eval(&z) * 3.0).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn iwasawa_is_chern_flat_and_balanced() {
        let c = iwasawa_chart();
        let z = z3();
        assert!(c.lee_form(&z).unwrap().iter().all(|t| t.norm() < 1e-9));
        assert!(max_entry(&c.chern_ricci(&z).unwrap()) < 1e-6);
    }

    #[test]
    fn ricci_relation_on_random_charts() {
        for (n, seed) in [(2, 1), (3, 2)] {
            let c = PolyChartSpec::random(n, seed, "rel").chart().unwrap();
            for z in sample_points(n, 3, 0.5, seed, "relpts") {
                assert!(c.ricci_relation_residual(&z).unwrap() < 1e-5);
            }
        }
    }

    #[test]
    fn non_hermitian_metric_rejected() {
        let c = HermitianChart::new(2, Arc::new(|_z: &[C]| DMatrix::from_row_slice(2, 2, &[C::new(1.0, 0.0), C::new(0.5, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)])), 1e-4);
        assert!(c.lee_form(&[C::new(0.0, 0.0); 2]).is_err());
        let c = HermitianChart::new(1, Arc::new(|_z: &[C]| DMatrix::from_element(1, 1, C::new(-1.0, 0.0))), 1e-4);
        assert_eq!(c.metric_at(&[C::new(0.0, 0.0)]).unwrap_err(), Error::NotPositiveDefinite);
    }
}

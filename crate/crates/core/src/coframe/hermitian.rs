//! Almost Hermitian structures on a coframe: Nijenhuis tensor, Lee form,
//! the Bismut, Chern and Hermitian connections, and the nearly Kähler identities.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{tensor_index, CoframeAlgebra, FrameConnection};
use crate::canonical::kahler_form;
use crate::error::{Error, Result};
use crate::exterior::{ComplexForm, MultiForm};

/// Coframe with a compatible almost complex structure J (columns are images
/// of frame vectors) and fundamental form Ω_{AB} = g_{AC} J^C_B.
#[derive(Clone, Debug)]
pub struct AlmostHermitian {
    pub cf: CoframeAlgebra,
    pub j: DMatrix<f64>,
    pub omega: MultiForm,
}

impl AlmostHermitian {
    pub fn new(cf: CoframeAlgebra, j: DMatrix<f64>) -> Result<Self> {
        let n = cf.dim();
        if j.nrows() != n || j.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: j.nrows() });
        }
        let sq = (&j * &j + DMatrix::identity(n, n)).abs().max();
        if sq > 1e-12 {
            return Err(Error::Precondition { what: "J² = −1".into(), residual: sq });
        }
        let g = cf.metric().matrix();
        let compat = (j.transpose() * g * &j - g).abs().max();
        if compat > 1e-12 {
            return Err(Error::Precondition { what: "g(J·,J·) = g".into(), residual: compat });
        }
        let omega = kahler_form(cf.metric(), &j);
        Ok(AlmostHermitian { cf, j, omega })
    }

    pub fn dim(&self) -> usize {
        self.cf.dim()
    }

    /// N(X,Y) = [JX,JY] − [X,Y] − J[JX,Y] − J[X,JY] on frame vectors;
    /// entry (A, B, C) is the A-component of N(e_B, e_C).
    pub fn nijenhuis(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n * n];
        let col = |m: &DMatrix<f64>, b: usize| -> Vec<f64> { m.column(b).iter().copied().collect() };
        let id = DMatrix::<f64>::identity(n, n);
        for b in 0..n {
            for c in 0..n {
                let (x, y) = (col(&id, b), col(&id, c));
                let (jx, jy) = (col(&self.j, b), col(&self.j, c));
                let t1 = self.cf.bracket(&jx, &jy);
                let t2 = self.cf.bracket(&x, &y);
                let t3 = &self.j * nalgebra::DVector::from_vec(self.cf.bracket(&jx, &y));
                let t4 = &self.j * nalgebra::DVector::from_vec(self.cf.bracket(&x, &jy));
                for a in 0..n {
                    out[tensor_index(n, a, b, c)] = t1[a] - t2[a] - t3[a] - t4[a];
                }
            }
        }
        out
    }

    pub fn nijenhuis_norm(&self) -> f64 {
        self.nijenhuis().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn d_omega(&self) -> MultiForm {
        self.cf.d(&self.omega)
    }

    /// d^cΩ = −dΩ(J·,J·,J·).
    pub fn dc_omega(&self) -> Result<MultiForm> {
        Ok(self.d_omega().transform(&self.j)?.scaled(-1.0))
    }

    /// θ_i = −g^{kl} (∇_l Ω)_{kj} J^j_i with ∇ the Levi-Civita connection.
    pub fn lee_form(&self) -> Result<MultiForm> {
        let n = self.dim();
        let lc = FrameConnection::levi_civita(&self.cf);
        let nabla = lc.covariant_derivative(&self.omega);
        let ginv = self.cf.metric().inverse();
        let mut theta = vec![0.0; n];
        for (i, t) in theta.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in 0..n {
                for l in 0..n {
                    if ginv[(k, l)] == 0.0 {
                        continue;
                    }
                    for jj in 0..n {
                        s += ginv[(k, l)] * nabla[l].component(&[k, jj]) * self.j[(jj, i)];
                    }
                }
            }
            *t = -s;
        }
        Ok(MultiForm::one_form(&theta))
    }

    /// Bismut connection: Γ_{DBC} = Γ^g_{DBC} + ½ d^cΩ_{BCD}.
    pub fn bismut(&self) -> Result<FrameConnection> {
        let n = self.dim();
        let g = self.cf.metric().matrix();
        let lc = FrameConnection::levi_civita(&self.cf).lowered(g);
        let dc = self.dc_omega()?;
        let mut gamma = lc;
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    gamma[tensor_index(n, d, b, c)] += 0.5 * dc.component(&[b, c, d]);
                }
            }
        }
        Ok(FrameConnection::from_lowered(n, &gamma, self.cf.metric().inverse()))
    }

    /// Chern connection of an integrable J: Γ_{DBC} = Γ^g_{DBC} + ½ J^E_B dΩ_{ECD}.
    pub fn chern(&self) -> Result<FrameConnection> {
        let n = self.dim();
        let g = self.cf.metric().matrix();
        let lc = FrameConnection::levi_civita(&self.cf).lowered(g);
        let dom = self.d_omega();
        let mut gamma = lc;
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let s: f64 = (0..n).map(|e| self.j[(e, b)] * dom.component(&[e, c, d])).sum();
                    gamma[tensor_index(n, d, b, c)] += 0.5 * s;
                }
            }
        }
        Ok(FrameConnection::from_lowered(n, &gamma, self.cf.metric().inverse()))
    }

    /// ∇' = ∇^g − ½ J ∇^g J, the minimal Hermitian connection.
    pub fn hermitian_connection(&self) -> FrameConnection {
        let n = self.dim();
        let lc = FrameConnection::levi_civita(&self.cf);
        let nj = lc.endomorphism_derivative(&self.j);
        let corr: Vec<DMatrix<f64>> = nj.iter().map(|m| &self.j * m * 0.5).collect();
        FrameConnection::from_fn(n, |a, b, c| lc.get(a, b, c) - corr[b][(a, c)])
    }

    /// max_B |∇_B J|.
    pub fn j_defect(&self, conn: &FrameConnection) -> f64 {
        conn.endomorphism_derivative(&self.j).iter().map(|m| m.abs().max()).fold(0.0, f64::max)
    }

    /// A(X,Y,Z) = g((∇^g_X J)Y, Z) on frame vectors.
    pub fn nabla_j_tensor(&self) -> Vec<f64> {
        let n = self.dim();
        let lc = FrameConnection::levi_civita(&self.cf);
        let nj = lc.endomorphism_derivative(&self.j);
        let g = self.cf.metric().matrix();
        let mut out = vec![0.0; n * n * n];
        for x in 0..n {
            let low = g * &nj[x];
            for y in 0..n {
                for z in 0..n {
                    out[tensor_index(n, x, y, z)] = low[(z, y)];
                }
            }
        }
        out
    }

    pub fn nearly_kahler_report(&self) -> NearlyKahlerReport {
        let n = self.dim();
        let a = self.nabla_j_tensor();
        let dom = self.d_omega();
        let nij = self.nijenhuis();
        let g = self.cf.metric().matrix();
        let mut sym: f64 = 0.0;
        let (mut aa, mut ad, mut an) = (0.0, 0.0, 0.0);
        // lowered N(JX, Y, Z) = g(N(JX,Y), Z)
        let mut n_jx = vec![0.0; n * n * n];
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let mut s = 0.0;
                    for e in 0..n {
                        for w in 0..n {
                            s += self.j[(e, x)] * g[(z, w)] * nij[tensor_index(n, w, e, y)];
                        }
                    }
                    n_jx[tensor_index(n, x, y, z)] = s;
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                let (i, k) = (tensor_index(n, x, y, 0), tensor_index(n, y, x, 0));
                for z in 0..n {
                    sym = sym.max((a[i + z] + a[k + z]).abs());
                }
                for z in 0..n {
                    let v = a[tensor_index(n, x, y, z)];
                    aa += v * v;
                    ad += v * dom.component(&[x, y, z]);
                    an += v * n_jx[tensor_index(n, x, y, z)];
                }
            }
        }
        let (kd, kn) = if aa > 0.0 { (ad / aa, an / aa) } else { (0.0, 0.0) };
        let mut resid_d: f64 = 0.0;
        let mut resid_n: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let v = a[tensor_index(n, x, y, z)];
                    resid_d = resid_d.max((dom.component(&[x, y, z]) - kd * v).abs());
                    resid_n = resid_n.max((n_jx[tensor_index(n, x, y, z)] - kn * v).abs());
                }
            }
        }
        let (constant, constant_residual) = self.nk_constant();
        NearlyKahlerReport {
            symmetric_residual: sym,
            d_omega_ratio: kd,
            d_omega_residual: resid_d,
            nijenhuis_ratio: kn,
            nijenhuis_residual: resid_n,
            constant,
            constant_residual,
        }
    }

    /// Fits |(∇_X J)Y|² = ½ a (|X|²|Y|² − g(X,Y)² − g(X,JY)²) over frame pairs
    /// and sums of frame pairs.
    fn nk_constant(&self) -> (f64, f64) {
        let n = self.dim();
        let lc = FrameConnection::levi_civita(&self.cf);
        let nj = lc.endomorphism_derivative(&self.j);
        let metric = self.cf.metric();
        let mut samples = Vec::new();
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut x = vec![0.0; n];
                    x[i] = 1.0;
                    x[k] += 0.5;
                    let mut y = vec![0.0; n];
                    y[l] = 1.0;
                    y[(l + 1) % n] -= 0.3;
                    let nx: DMatrix<f64> = DMatrix::from_fn(n, n, |r, c| (0..n).map(|b| x[b] * nj[b][(r, c)]).sum());
                    let v: Vec<f64> = (nx * nalgebra::DVector::from_column_slice(&y)).iter().copied().collect();
                    let jy: Vec<f64> = (&self.j * nalgebra::DVector::from_column_slice(&y)).iter().copied().collect();
                    let lhs = metric.dot(&v, &v);
                    let rhs = 0.5
                        * (metric.dot(&x, &x) * metric.dot(&y, &y)
                            - metric.dot(&x, &y).powi(2)
                            - metric.dot(&x, &jy).powi(2));
                    samples.push((lhs, rhs));
                }
            }
        }
        let den: f64 = samples.iter().map(|(_, r)| r * r).sum();
        let a = if den > 0.0 { samples.iter().map(|(l, r)| l * r).sum::<f64>() / den } else { 0.0 };
        let resid = samples.iter().map(|(l, r)| (l - a * r).abs()).fold(0.0, f64::max);
        (a, resid)
    }

    /// max |g((∇^g_X J)Y, Z)| over X, Y, Z in the listed frame vectors.
    pub fn lagrangian_parallel_defect(&self, sub: &[usize]) -> f64 {
        let n = self.dim();
        let a = self.nabla_j_tensor();
        let mut m: f64 = 0.0;
        for &x in sub {
            for &y in sub {
                for &z in sub {
                    m = m.max(a[tensor_index(n, x, y, z)].abs());
                }
            }
        }
        m
    }

    /// Ω restricted to a sub-frame vanishes.
    pub fn is_lagrangian(&self, sub: &[usize], tol: f64) -> bool {
        2 * sub.len() == self.dim() && self.omega.restrict(sub).max_abs() <= tol
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NearlyKahlerReport {
    /// max |(∇_X J)Y + (∇_Y J)X|
    pub symmetric_residual: f64,
    /// dΩ(X,Y,Z) ≈ ratio · g((∇_X J)Y,Z)
    pub d_omega_ratio: f64,
    pub d_omega_residual: f64,
    /// g(N(JX,Y),Z) ≈ ratio · g((∇_X J)Y,Z)
    pub nijenhuis_ratio: f64,
    pub nijenhuis_residual: f64,
    pub constant: f64,
    pub constant_residual: f64,
}

/// z with a = z·b, found from the largest component of b; returns the
/// residual max |a − z b| alongside.
pub fn complex_ratio(a: &ComplexForm, b: &ComplexForm) -> Result<(Complex64, f64)> {
    if a.dim() != b.dim() || a.degree() != b.degree() {
        return Err(Error::DegreeMismatch { expected: b.degree(), found: a.degree() });
    }
    let mut best = (0u32, 0.0);
    for (blade, _) in b.re.terms().chain(b.im.terms()) {
        let z = Complex64::new(b.re.coeff_blade(blade), b.im.coeff_blade(blade)).norm();
        if z > best.1 {
            best = (blade, z);
        }
    }
    if best.1 == 0.0 {
        return Err(Error::InvalidInput("reference form vanishes".into()));
    }
    let bz = Complex64::new(b.re.coeff_blade(best.0), b.im.coeff_blade(best.0));
    let az = Complex64::new(a.re.coeff_blade(best.0), a.im.coeff_blade(best.0));
    let z = az / bz;
    let diff = ComplexForm::new(&a.re - &b.scaled(z).re, &a.im - &b.scaled(z).im);
    Ok((z, diff.max_abs()))
}

/// Adds κ_B J^A_C to a J-parallel metric connection so that ψ becomes
/// parallel. Requires ∇_B ψ = iα_B ψ.
pub fn su_connection(conn: &FrameConnection, j: &DMatrix<f64>, psi: &ComplexForm) -> Result<FrameConnection> {
    let n = conn.dim();
    let jpsi = psi.apply_derivation(&(-j));
    let (mu, r) = complex_ratio(&jpsi, psi)?;
    if r > 1e-10 || mu.re.abs() > 1e-10 || mu.im.abs() < 1e-12 {
        return Err(Error::Precondition { what: "ψ of type (n,0) for J".into(), residual: r.max(mu.re.abs()) });
    }
    let mu = mu.im;
    let mut kappa = vec![0.0; n];
    for (b, d) in conn.covariant_derivative_complex(psi).iter().enumerate() {
        let (z, r) = complex_ratio(d, psi)?;
        if r > 1e-10 || z.re.abs() > 1e-10 {
            return Err(Error::Precondition { what: "∇ψ proportional to iψ".into(), residual: r.max(z.re.abs()) });
        }
        kappa[b] = -z.im / mu;
    }
    Ok(conn.corrected(|a, b, c| kappa[b] * j[(a, c)]))
}

/// Hermitian summary for reports.
#[derive(Clone, Debug, Serialize)]
pub struct HermitianSummary {
    pub nijenhuis: f64,
    pub d_omega: f64,
    pub lee: f64,
    pub bismut_torsion_skew: f64,
    pub chern_torsion_type: Option<f64>,
}

pub fn summarize(h: &AlmostHermitian) -> Result<HermitianSummary> {
    let n = h.dim();
    let bismut = h.bismut()?;
    let tb = super::lower_first(&bismut.torsion(&h.cf), n, h.cf.metric().matrix());
    let mut skew: f64 = 0.0;
    for d in 0..n {
        for b in 0..n {
            for c in 0..n {
                skew = skew.max((tb[tensor_index(n, d, b, c)] + tb[tensor_index(n, b, d, c)]).abs());
            }
        }
    }
    let nij = h.nijenhuis_norm();
    let chern_torsion_type = if nij < 1e-12 { Some(chern_torsion_type_defect(h)?) } else { None };
    Ok(HermitianSummary {
        nijenhuis: nij,
        d_omega: h.d_omega().max_abs(),
        lee: h.lee_form()?.max_abs(),
        bismut_torsion_skew: skew,
        chern_torsion_type,
    })
}

/// max |T(JX,JY) + T(X,Y)| for the Chern connection.
pub fn chern_torsion_type_defect(h: &AlmostHermitian) -> Result<f64> {
    let n = h.dim();
    let t = h.chern()?.torsion(&h.cf);
    let mut m: f64 = 0.0;
    for b in 0..n {
        for c in 0..n {
            for a in 0..n {
                let mut s = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        s += h.j[(p, b)] * h.j[(q, c)] * t[tensor_index(n, a, p, q)];
                    }
                }
                m = m.max((s + t[tensor_index(n, a, b, c)]).abs());
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::unitary_j;
    use crate::exterior::FrameMetric;

    /// su(2) ⊕ su(2) with e_a = σ_a, e_{a'} = σ̃_a.
    fn s3s3() -> AlmostHermitian {
        let s = CoframeAlgebra::su2();
        let cf = CoframeAlgebra::direct_sum(&[&s, &s]).unwrap();
        AlmostHermitian::new(cf, unitary_j(3)).unwrap()
    }

    #[test]
    fn rejects_non_complex_structure() {
        let cf = CoframeAlgebra::flat(2);
        assert!(AlmostHermitian::new(cf, DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn flat_torus_is_kahler() {
        let h = AlmostHermitian::new(CoframeAlgebra::flat(4), unitary_j(2)).unwrap();
        assert_eq!(h.nijenhuis_norm(), 0.0);
        assert_eq!(h.d_omega().max_abs(), 0.0);
    }

    #[test]
    fn connections_preserve_j_and_metric() {
        let h = s3s3();
        let g = h.cf.metric().matrix().clone();
        for conn in [h.hermitian_connection(), h.bismut().unwrap()] {
            assert!(conn.metric_defect(&g) < 1e-14);
        }
        assert!(h.j_defect(&h.hermitian_connection()) < 1e-14);
    }

    #[test]
    fn bismut_torsion_is_skew_when_integrable() {
        let s = CoframeAlgebra::su2();
        let cf = CoframeAlgebra::direct_sum(&[&s, &s]).unwrap();
        // Calabi–Eckmann type structure: J σ1 = σ2, J σ3 = σ̃3, J σ̃1 = σ̃2
        let mut j = DMatrix::zeros(6, 6);
        for (x, y) in [(0, 1), (2, 5), (3, 4)] {
            j[(y, x)] = 1.0;
            j[(x, y)] = -1.0;
        }
        let h = AlmostHermitian::new(cf, j).unwrap();
        assert!(h.nijenhuis_norm() < 1e-14);
        let b = h.bismut().unwrap();
        assert!(h.j_defect(&b) < 1e-14);
        let sum = summarize(&h).unwrap();
        assert!(sum.bismut_torsion_skew < 1e-14);
        assert!(sum.chern_torsion_type.unwrap() < 1e-14);
        let c = h.chern().unwrap();
        assert!(h.j_defect(&c) < 1e-14);
        assert!(c.metric_defect(h.cf.metric().matrix()) < 1e-14);
    }

    #[test]
    fn lee_form_matches_defining_relation() {
        let s = CoframeAlgebra::su2();
        let cf = CoframeAlgebra::direct_sum(&[&s, &s]).unwrap();
        let mut j = DMatrix::zeros(6, 6);
        for (x, y) in [(0, 1), (2, 5), (3, 4)] {
            j[(y, x)] = 1.0;
            j[(x, y)] = -1.0;
        }
        let h = AlmostHermitian::new(cf.clone(), j).unwrap();
        let theta = h.lee_form().unwrap();
        let om2 = h.omega.wedge(&h.omega).unwrap();
        let lhs = cf.d(&om2);
        let rhs = theta.wedge(&om2).unwrap();
        assert!((&lhs - &rhs).max_abs() < 1e-13, "{lhs:?} vs {rhs:?}");
        assert!(theta.max_abs() > 0.1);
    }

    #[test]
    fn su_correction_makes_psi_parallel() {
        let h = s3s3();
        let conn = h.hermitian_connection();
        let psi = crate::canonical::holomorphic_volume(3);
        let su = su_connection(&conn, &h.j, &psi).unwrap();
        let d = su.covariant_derivative_complex(&psi);
        assert!(d.iter().all(|f| f.max_abs() < 1e-13));
        assert!(h.j_defect(&su) < 1e-13);
        assert!(su.metric_defect(&FrameMetric::identity(6).matrix().clone()) < 1e-13);
    }
}

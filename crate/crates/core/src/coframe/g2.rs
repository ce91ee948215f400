//! G₂ and Spin(7) structures on a coframe: torsion classification and the
//! connections with holonomy in G₂ or Spin(7).

use nalgebra::DMatrix;
use serde::Serialize;

use super::{tensor_index, CoframeAlgebra, FrameConnection};
use crate::canonical::g2_metric_from_form;
use crate::error::{Error, Result};
use crate::exterior::{blades, FrameMetric, MultiForm};

const CLASS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct G2Classification {
    pub d_psi: f64,
    pub d_star_psi: f64,
    /// λ fitted from dψ ≈ λ *ψ
    pub lambda: f64,
    /// |dψ − λ *ψ|
    pub nearly_parallel_residual: f64,
    pub lee_form: Vec<f64>,
    /// |d*ψ − θ∧*ψ|
    pub integrability_defect: f64,
    /// dψ with its *ψ and Λ³₇ parts removed
    pub h_residual: f64,
    /// |dψ ∧ ψ|
    pub d_psi_wedge_psi: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub calibrated: bool,
    pub cocalibrated: bool,
    pub nearly_parallel: bool,
    pub integrable: bool,
    pub pure_type: Option<String>,
}

/// Checks that ψ induces the frame metric (rejects non-G₂ three-forms).
pub fn check_g2_form(psi: &MultiForm, metric: &FrameMetric) -> Result<()> {
    if psi.dim() != 7 || psi.degree() != 3 {
        return Err(Error::InvalidInput("G₂ form must be a 3-form in dimension 7".into()));
    }
    let induced = g2_metric_from_form(psi);
    let residual = (&induced - metric.matrix()).abs().max();
    if residual > 1e-10 {
        return Err(Error::Precondition { what: "ψ induces the frame metric".into(), residual });
    }
    Ok(())
}

/// Orthogonal projection of a 3-form onto {α∧ψ}, returned as α.
fn lambda7_part(form: &MultiForm, psi: &MultiForm, metric: &FrameMetric) -> Result<Vec<f64>> {
    let n = 7;
    // Gram system; |α∧ψ|² = 4|α|² for a G₂ form
    let cols: Vec<MultiForm> =
        (0..n).map(|i| MultiForm::basis(n, &[i]).wedge(psi)).collect::<Result<_>>()?;
    let gram = DMatrix::from_fn(n, n, |i, j| cols[i].inner(&cols[j], metric));
    let rhs = nalgebra::DVector::from_fn(n, |i, _| cols[i].inner(form, metric));
    let sol = gram.lu().solve(&rhs).ok_or_else(|| Error::Numerical("singular Λ³₇ Gram matrix".into()))?;
    Ok(sol.iter().copied().collect())
}

pub fn g2_classify(cf: &CoframeAlgebra, psi: &MultiForm) -> Result<G2Classification> {
    let metric = cf.metric();
    check_g2_form(psi, metric)?;
    let star = psi.hodge_star(metric)?;
    let dpsi = cf.d(psi);
    let dstar = cf.d(&star);
    let ss = star.inner(&star, metric);
    let lambda = dpsi.inner(&star, metric) / ss;
    let np_resid = (&dpsi - &star.scaled(lambda)).max_abs();
    // 3θ = −*(*dψ ∧ ψ)
    let t = dpsi.hodge_star(metric)?.wedge(psi)?.hodge_star(metric)?;
    let theta_form = t.scaled(-1.0 / 3.0);
    let theta: Vec<f64> = (0..7).map(|i| theta_form.component(&[i])).collect();
    let integ = (&dstar - &theta_form.wedge(&star)?).max_abs();
    let alpha = lambda7_part(&dpsi, psi, metric)?;
    let a7 = MultiForm::one_form(&alpha).wedge(psi)?;
    let h = &(&dpsi - &star.scaled(lambda)) - &a7;
    let w1 = lambda.abs();
    let w4 = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
    let w3 = h.coeff_norm();
    let w2 = integ;
    let names = [("W1", w1), ("W2", w2), ("W3", w3), ("W4", w4)];
    let nonzero: Vec<&str> = names.iter().filter(|(_, v)| *v > CLASS_TOL).map(|(s, _)| *s).collect();
    let pure_type = match nonzero.len() {
        0 => Some("parallel".to_string()),
        1 => Some(nonzero[0].to_string()),
        _ => None,
    };
    Ok(G2Classification {
        d_psi: dpsi.max_abs(),
        d_star_psi: dstar.max_abs(),
        lambda,
        nearly_parallel_residual: np_resid,
        lee_form: theta,
        integrability_defect: integ,
        h_residual: w3,
        d_psi_wedge_psi: dpsi.wedge(psi)?.max_abs(),
        w1,
        w2,
        w3,
        w4,
        calibrated: dpsi.max_abs() <= CLASS_TOL,
        cocalibrated: dstar.max_abs() <= CLASS_TOL,
        nearly_parallel: np_resid <= CLASS_TOL && lambda.abs() > CLASS_TOL,
        integrable: integ <= CLASS_TOL,
        pure_type,
    })
}

/// Full component array a_{A₁…A_k} of a k-form, row-major, length n^k.
pub fn dense_tensor(form: &MultiForm) -> Vec<f64> {
    let n = form.dim();
    let k = form.degree();
    let mut out = vec![0.0; n.pow(k as u32)];
    for (blade, c) in form.terms() {
        let ix = crate::exterior::blade_indices(blade);
        crate::exterior::for_each_permutation(k, |perm, sign| {
            let mut flat = 0;
            for &p in perm {
                flat = flat * n + ix[p];
            }
            out[flat] = sign as f64 * c;
        });
    }
    out
}

/// K[k][i][j] = Σ a_{i p…} (∇_k a)_{j p…}, summed over all repeated indices.
fn contraction(form: &MultiForm, nabla: &[MultiForm]) -> Vec<f64> {
    let n = form.dim();
    let k = form.degree();
    let a = dense_tensor(form);
    let tail = n.pow(k as u32 - 1);
    let mut out = vec![0.0; n * n * n];
    for (kk, nf) in nabla.iter().enumerate() {
        let b = dense_tensor(nf);
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..tail).map(|t| a[i * tail + t] * b[j * tail + t]).sum();
                out[tensor_index(n, kk, i, j)] = s;
            }
        }
    }
    out
}

/// ∇_k Y^i = ∇^g_k Y^i + (1/18) ψ^i_{pq} ∇^g_k ψ_j^{pq} Y^j + (1/108) *ψ^i_{pqr} ∇^g_k *ψ_j^{pqr} Y^j.
pub fn g2_connection(cf: &CoframeAlgebra, psi: &MultiForm) -> Result<FrameConnection> {
    let metric = cf.metric();
    check_g2_form(psi, metric)?;
    if !metric.is_identity() {
        return Err(Error::InvalidInput("G₂ connection implemented for orthonormal frames".into()));
    }
    let star = psi.hodge_star(metric)?;
    let lc = FrameConnection::levi_civita(cf);
    let k1 = contraction(psi, &lc.covariant_derivative(psi));
    let k2 = contraction(&star, &lc.covariant_derivative(&star));
    let n = 7;
    Ok(lc.corrected(|a, b, c| k1[tensor_index(n, b, a, c)] / 18.0 + k2[tensor_index(n, b, a, c)] / 108.0))
}

/// ∇_k Y^i = ∇^g_k Y^i + (1/96) Φ^i_{mpl} ∇^g_k Φ_j^{mpl} Y^j.
pub fn spin7_connection(cf: &CoframeAlgebra, phi: &MultiForm) -> Result<FrameConnection> {
    if phi.dim() != 8 || phi.degree() != 4 {
        return Err(Error::InvalidInput("Spin(7) form must be a 4-form in dimension 8".into()));
    }
    if !cf.metric().is_identity() {
        return Err(Error::InvalidInput("Spin(7) connection implemented for orthonormal frames".into()));
    }
    let sd = (&phi.hodge_star(cf.metric())? - phi).max_abs();
    if sd > 1e-10 {
        return Err(Error::Precondition { what: "Φ self-dual".into(), residual: sd });
    }
    let lc = FrameConnection::levi_civita(cf);
    let k = contraction(phi, &lc.covariant_derivative(phi));
    Ok(lc.corrected(|a, b, c| k[tensor_index(8, b, a, c)] / 96.0))
}

/// Zero-order difference between the associative Dirac operators built from
/// the connection with skew torsion T = −(λ/6)ψ and from the Levi-Civita
/// connection, on the normal space of the plane spanned by `tangent`.
/// Returns (s, residual) with the difference equal to s·Id up to residual.
pub fn associative_shift(psi: &MultiForm, lambda: f64, tangent: &[usize]) -> Result<(f64, f64)> {
    if tangent.len() != 3 {
        return Err(Error::InvalidInput("associative planes are 3-dimensional".into()));
    }
    let n = psi.dim();
    let normal: Vec<usize> = (0..n).filter(|i| !tangent.contains(i)).collect();
    // ∇̃ has torsion −T; its difference from ∇^g is −½(−T) = ½T, with
    // (∇̃_i V)^b − (∇^g_i V)^b = ½ T^b_{ic} V^c
    let t = psi.scaled(-lambda / 6.0);
    let omegas: Vec<MultiForm> = tangent.iter().map(|&i| psi.interior_basis(i)).collect();
    let m = normal.len();
    let d = DMatrix::from_fn(m, m, |a, c| {
        let mut s = 0.0;
        for (ii, &i) in tangent.iter().enumerate() {
            for &b in &normal {
                s += omegas[ii].component(&[normal[a], b]) * 0.5 * t.component(&[b, i, normal[c]]);
            }
        }
        s
    });
    let shift = d.trace() / m as f64;
    let resid = (&d - DMatrix::identity(m, m) * shift).abs().max();
    Ok((shift, resid))
}

/// Indices of coframe directions whose 1-forms appear in `form`.
pub fn support(form: &MultiForm) -> Vec<usize> {
    let mut mask = 0u32;
    for (b, c) in form.terms() {
        if c != 0.0 {
            mask |= b;
        }
    }
    (0..form.dim()).filter(|i| mask & (1 << i) != 0).collect()
}

/// All k-blades of the coframe, for enumerating components in reports.
pub fn component_count(n: usize, k: usize) -> usize {
    blades(n, k).len()
}

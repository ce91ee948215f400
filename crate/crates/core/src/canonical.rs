//! Canonical calibration data for the U(n), SU(n), G2 and Spin(7) blocks.
//!
//! Unitary frames are ordered (1,…,n,1',…,n'), so e^{a'} has 0-based index
//! n + a − 1. G2 frames are indexed 1..7 and Spin(7) frames 1..8 in the
//! transcription tables below.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{ComplexForm, FrameMetric, MultiForm, VectorForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HolonomyKind {
    Unitary(usize),
    SpecialUnitary(usize),
    G2,
    Spin7,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolonomyStructure {
    pub kind: HolonomyKind,
    pub dim: usize,
    pub metric: FrameMetric,
    /// Real forms by name: `Omega`, `psi`, `star_psi`, `Phi`, `Re_psi`, `Im_psi`.
    pub forms: BTreeMap<String, MultiForm>,
    pub psi_n0: Option<ComplexForm>,
    pub chi: Option<VectorForm>,
    pub tau: Option<VectorForm>,
    /// Anti-self-dual two-forms Ω_i on the normal 4-space (G2 and Spin(7)).
    pub asd_basis: Option<Vec<MultiForm>>,
    #[serde(skip)]
    pub j: Option<DMatrix<f64>>,
}

impl HolonomyStructure {
    pub fn form(&self, name: &str) -> Result<&MultiForm> {
        self.forms
            .get(name)
            .ok_or_else(|| Error::InvalidInput(format!("structure has no form `{name}`")))
    }
}

/// Orientation sign of the unitary frame (1..n,1'..n') relative to Ω^n/n!.
pub fn unitary_orientation(n: usize) -> i8 {
    if (n * (n.saturating_sub(1)) / 2) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// J with J e_{a'} = e_a and J e_a = −e_{a'} (columns are images).
pub fn unitary_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        j[(a, n + a)] = 1.0;
        j[(n + a, a)] = -1.0;
    }
    j
}

/// Ω_{AB} = g_{AC} J^C_B.
pub fn kahler_form(metric: &FrameMetric, j: &DMatrix<f64>) -> MultiForm {
    let n = j.nrows();
    let om = metric.matrix() * j;
    let mut f = MultiForm::zero(n, 2);
    for a in 0..n {
        for b in (a + 1)..n {
            let c = om[(a, b)];
            if c != 0.0 {
                f += &MultiForm::basis(n, &[a, b]).scaled(c);
            }
        }
    }
    f
}

pub fn build_unitary(n: usize) -> Result<HolonomyStructure> {
    if n == 0 {
        return Err(Error::InvalidInput("complex dimension must be ≥ 1".into()));
    }
    let dim = 2 * n;
    let metric = FrameMetric::identity(dim).with_orientation(unitary_orientation(n));
    let j = unitary_j(n);
    let omega = kahler_form(&metric, &j);
    let mut forms = BTreeMap::new();
    forms.insert("Omega".to_string(), omega);
    Ok(HolonomyStructure {
        kind: HolonomyKind::Unitary(n),
        dim,
        metric,
        forms,
        psi_n0: None,
        chi: None,
        tau: None,
        asd_basis: None,
        j: Some(j),
    })
}

/// ψ = ∏ (e^a + i e^{a'}).
pub fn holomorphic_volume(n: usize) -> ComplexForm {
    let dim = 2 * n;
    let mut psi = ComplexForm::scalar(dim, Complex64::new(1.0, 0.0));
    for a in 0..n {
        let factor = ComplexForm::new(MultiForm::basis(dim, &[a]), MultiForm::basis(dim, &[n + a]));
        psi = psi.wedge(&factor).expect("same dimension");
    }
    psi
}

pub fn build_special_unitary(n: usize) -> Result<HolonomyStructure> {
    if n < 2 {
        return Err(Error::InvalidInput("SU(n) structure needs n ≥ 2".into()));
    }
    let mut s = build_unitary(n)?;
    s.kind = HolonomyKind::SpecialUnitary(n);
    let psi = holomorphic_volume(n);
    let residual = normalization_residual(&psi, &s.metric)?;
    if residual > 1e-12 {
        return Err(Error::Precondition { what: "holomorphic volume normalization".into(), residual });
    }
    s.forms.insert("Re_psi".into(), psi.re.clone());
    s.forms.insert("Im_psi".into(), psi.im.clone());
    s.psi_n0 = Some(psi);
    Ok(s)
}

/// φ_k = Ω^k / k!.
pub fn wirtinger_form(omega: &MultiForm, k: usize) -> Result<MultiForm> {
    omega.divided_power(k)
}

/// Maximum deviation of (−1)^{n(n−1)/2}(i/2)^n ψ∧ψ̄ from the volume form.
pub fn normalization_residual(psi: &ComplexForm, metric: &FrameMetric) -> Result<f64> {
    let n = psi.degree();
    let sign = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let factor = Complex64::new(0.0, 0.5).powu(n as u32) * sign;
    let prod = psi.wedge(&psi.conj())?.scaled(factor);
    let vol = metric.volume_form();
    Ok((&prod.re - &vol).max_abs().max(prod.im.max_abs()))
}

/// The ratio f in ψ∧ψ̄ normalization: returns f with
/// (−1)^{n(n−1)/2}(i/2)^n ψ∧ψ̄ = f² dvol, or an error if the left side is
/// not a non-negative real multiple of dvol.
pub fn normalization_factor(psi: &ComplexForm, metric: &FrameMetric) -> Result<f64> {
    let n = psi.degree();
    let sign = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let factor = Complex64::new(0.0, 0.5).powu(n as u32) * sign;
    let prod = psi.wedge(&psi.conj())?.scaled(factor);
    let vol = metric.volume_form();
    let (b, v) = vol.terms().next().ok_or_else(|| Error::Numerical("empty volume form".into()))?;
    let ratio = prod.re.coeff_blade(b) / v;
    if ratio < 0.0 || prod.im.max_abs() > 1e-12 || (&prod.re - &vol.scaled(ratio)).max_abs() > 1e-12 {
        return Err(Error::Precondition { what: "ψ∧ψ̄ proportional to dvol".into(), residual: ratio });
    }
    Ok(ratio.sqrt())
}

fn g2_terms() -> Vec<(f64, [usize; 3])> {
    vec![
        (1.0, [1, 2, 3]),
        (1.0, [1, 4, 5]),
        (-1.0, [1, 6, 7]),
        (1.0, [2, 4, 6]),
        (1.0, [2, 5, 7]),
        (1.0, [3, 4, 7]),
        (-1.0, [3, 5, 6]),
    ]
}

fn labels3(dim: usize, terms: &[(f64, [usize; 3])]) -> MultiForm {
    let t: Vec<(f64, &[usize])> = terms.iter().map(|(c, i)| (*c, &i[..])).collect();
    MultiForm::from_labels(dim, 3, &t)
}

fn labels4(dim: usize, terms: &[(f64, [usize; 4])]) -> MultiForm {
    let t: Vec<(f64, &[usize])> = terms.iter().map(|(c, i)| (*c, &i[..])).collect();
    MultiForm::from_labels(dim, 4, &t)
}

fn labels2(dim: usize, terms: &[(f64, [usize; 2])]) -> MultiForm {
    let t: Vec<(f64, &[usize])> = terms.iter().map(|(c, i)| (*c, &i[..])).collect();
    MultiForm::from_labels(dim, 2, &t)
}

pub fn g2_form() -> MultiForm {
    labels3(7, &g2_terms())
}

/// Ω_1 = e^{45}−e^{67}, Ω_2 = e^{46}+e^{57}, Ω_3 = e^{47}−e^{56} on a frame of
/// dimension `dim`, with the four directions starting at 1-based label `first`.
pub fn asd_basis(dim: usize, first: usize) -> Vec<MultiForm> {
    let o = first;
    vec![
        labels2(dim, &[(1.0, [o, o + 1]), (-1.0, [o + 2, o + 3])]),
        labels2(dim, &[(1.0, [o, o + 2]), (1.0, [o + 1, o + 3])]),
        labels2(dim, &[(1.0, [o, o + 3]), (-1.0, [o + 1, o + 2])]),
    ]
}

pub fn g2_chi() -> VectorForm {
    let rows: [[(f64, [usize; 3]); 4]; 7] = [
        [(1.0, [2, 5, 6]), (-1.0, [2, 4, 7]), (1.0, [3, 4, 6]), (1.0, [3, 5, 7])],
        [(1.0, [1, 4, 7]), (-1.0, [1, 5, 6]), (-1.0, [3, 4, 5]), (1.0, [3, 6, 7])],
        [(1.0, [2, 4, 5]), (-1.0, [2, 6, 7]), (-1.0, [1, 4, 6]), (-1.0, [1, 5, 7])],
        [(1.0, [5, 6, 7]), (-1.0, [1, 2, 7]), (1.0, [1, 3, 6]), (-1.0, [2, 3, 5])],
        [(1.0, [1, 2, 6]), (-1.0, [4, 6, 7]), (1.0, [1, 3, 7]), (1.0, [2, 3, 4])],
        [(1.0, [4, 5, 7]), (-1.0, [1, 2, 5]), (-1.0, [1, 3, 4]), (1.0, [2, 3, 7])],
        [(1.0, [1, 2, 4]), (-1.0, [4, 5, 6]), (-1.0, [1, 3, 5]), (-1.0, [2, 3, 6])],
    ];
    VectorForm::new(rows.iter().map(|r| labels3(7, r)).collect()).expect("uniform components")
}

pub fn build_g2() -> Result<HolonomyStructure> {
    let metric = FrameMetric::identity(7);
    let psi = g2_form();
    let star = psi.hodge_star(&metric)?;
    let mut forms = BTreeMap::new();
    forms.insert("psi".to_string(), psi);
    forms.insert("star_psi".to_string(), star);
    Ok(HolonomyStructure {
        kind: HolonomyKind::G2,
        dim: 7,
        metric,
        forms,
        psi_n0: None,
        chi: Some(g2_chi()),
        tau: None,
        asd_basis: Some(asd_basis(7, 4)),
        j: None,
    })
}

/// g_{AB} = (1/6) ψ_{ACD} ψ_B^{CD} for an orthonormal frame.
pub fn g2_metric_from_form(psi: &MultiForm) -> DMatrix<f64> {
    let n = psi.dim();
    DMatrix::from_fn(n, n, |a, b| {
        let mut s = 0.0;
        for c in 0..n {
            for d in 0..n {
                s += psi.component(&[a, c, d]) * psi.component(&[b, c, d]);
            }
        }
        s / 6.0
    })
}

pub fn spin7_form() -> MultiForm {
    let a = asd_basis(8, 1);
    let b = asd_basis(8, 5);
    let mut phi = labels4(8, &[(1.0, [1, 2, 3, 4]), (1.0, [5, 6, 7, 8])]);
    for i in 0..3 {
        phi += &a[i].wedge(&b[i]).expect("same dimension");
    }
    phi
}

pub fn spin7_tau() -> VectorForm {
    let a = asd_basis(8, 1);
    let b = asd_basis(8, 5);
    let w = |x: &MultiForm, y: &MultiForm| x.wedge(y).expect("same dimension");
    let t1 = &w(&a[2], &b[1]) - &w(&a[1], &b[2]);
    let t2 = &w(&a[0], &b[2]) - &w(&a[2], &b[0]);
    let t3 = &w(&a[1], &b[0]) - &w(&a[0], &b[1]);
    let t4 = labels4(
        8,
        &[
            (1.0, [2, 3, 4, 5]),
            (-1.0, [1, 3, 4, 6]),
            (1.0, [1, 2, 4, 7]),
            (-1.0, [1, 2, 3, 8]),
            (1.0, [1, 6, 7, 8]),
            (-1.0, [2, 5, 7, 8]),
            (1.0, [3, 5, 6, 8]),
            (-1.0, [4, 5, 6, 7]),
        ],
    );
    let t5 = labels4(
        8,
        &[
            (1.0, [2, 3, 4, 6]),
            (1.0, [1, 3, 4, 5]),
            (1.0, [1, 2, 4, 8]),
            (1.0, [1, 2, 3, 7]),
            (-1.0, [2, 6, 7, 8]),
            (-1.0, [1, 5, 7, 8]),
            (-1.0, [4, 5, 6, 8]),
            (-1.0, [3, 5, 6, 7]),
        ],
    );
    let t6 = labels4(
        8,
        &[
            (1.0, [2, 3, 4, 7]),
            (1.0, [1, 3, 4, 8]),
            (-1.0, [1, 2, 4, 5]),
            (-1.0, [1, 2, 3, 6]),
            (-1.0, [3, 6, 7, 8]),
            (-1.0, [4, 5, 7, 8]),
            (1.0, [1, 5, 6, 8]),
            (1.0, [2, 5, 6, 7]),
        ],
    );
    let t7 = labels4(
        8,
        &[
            (1.0, [2, 3, 4, 8]),
            (-1.0, [1, 3, 4, 7]),
            (-1.0, [1, 2, 4, 6]),
            (1.0, [1, 2, 3, 5]),
            (-1.0, [4, 6, 7, 8]),
            (1.0, [3, 5, 7, 8]),
            (1.0, [2, 5, 6, 8]),
            (-1.0, [1, 5, 6, 7]),
        ],
    );
    VectorForm::new(vec![t1, t2, t3, t4, t5, t6, t7]).expect("uniform components")
}

pub fn build_spin7() -> Result<HolonomyStructure> {
    let metric = FrameMetric::identity(8);
    let phi = spin7_form();
    let star = phi.hodge_star(&metric)?;
    let residual = (&star - &phi).max_abs();
    if residual > 1e-12 {
        return Err(Error::Precondition { what: "Φ self-dual".into(), residual });
    }
    let mut forms = BTreeMap::new();
    forms.insert("Phi".to_string(), phi);
    Ok(HolonomyStructure {
        kind: HolonomyKind::Spin7,
        dim: 8,
        metric,
        forms,
        psi_n0: None,
        chi: None,
        tau: Some(spin7_tau()),
        asd_basis: Some(asd_basis(8, 5)),
        j: None,
    })
}

/// Matrix of a two-form: m[(a,b)] = ω_{ab}.
pub fn two_form_matrix(w: &MultiForm) -> DMatrix<f64> {
    let n = w.dim();
    DMatrix::from_fn(n, n, |a, b| w.component(&[a, b]))
}

/// Standard plane spanned by the listed frame vectors, as an n×k matrix.
pub fn coordinate_plane(n: usize, indices: &[usize]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, indices.len());
    for (c, &i) in indices.iter().enumerate() {
        m[(i, c)] = 1.0;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_j_is_complex_structure() {
        for n in 1..5 {
            let j = unitary_j(n);
            let id = DMatrix::<f64>::identity(2 * n, 2 * n);
            assert_eq!(&j * &j, -&id);
            assert_eq!(j.transpose() * &j, id);
        }
    }

    #[test]
    fn omega_three_terms_and_volume() {
        let s = build_unitary(3).unwrap();
        let om = s.form("Omega").unwrap();
        assert_eq!(om.len(), 3);
        let phi3 = wirtinger_form(om, 3).unwrap();
        assert!(phi3.approx_eq(&s.metric.volume_form(), 1e-15));
    }

    #[test]
    fn n1_omega() {
        let s = build_unitary(1).unwrap();
        assert_eq!(s.form("Omega").unwrap(), &MultiForm::basis(2, &[0, 1]));
    }

    #[test]
    fn re_psi_n2() {
        let s = build_special_unitary(2).unwrap();
        let expect = MultiForm::from_terms(4, 2, &[(1.0, &[0, 1]), (-1.0, &[2, 3])]);
        assert_eq!(s.form("Re_psi").unwrap(), &expect);
    }

    #[test]
    fn nvol_holds() {
        for n in 2..=4 {
            let s = build_special_unitary(n).unwrap();
            let r = normalization_residual(s.psi_n0.as_ref().unwrap(), &s.metric).unwrap();
            assert_eq!(r, 0.0);
            let f = normalization_factor(s.psi_n0.as_ref().unwrap(), &s.metric).unwrap();
            assert_eq!(f, 1.0);
        }
    }

    #[test]
    fn g2_metric_identity() {
        let g = g2_metric_from_form(&g2_form());
        assert_eq!(g, DMatrix::identity(7, 7));
    }

    #[test]
    fn g2_interior_first() {
        let i1 = g2_form().interior_basis(0);
        let expect = MultiForm::from_labels(7, 2, &[(1.0, &[2, 3]), (1.0, &[4, 5]), (-1.0, &[6, 7])]);
        assert_eq!(i1, expect);
    }

    #[test]
    fn g2_asd_decomposition() {
        let mut psi = MultiForm::basis(7, &[0, 1, 2]);
        for (i, w) in asd_basis(7, 4).iter().enumerate() {
            psi += &MultiForm::basis(7, &[i]).wedge(w).unwrap();
        }
        assert_eq!(psi, g2_form());
    }

    #[test]
    fn star_psi_explicit() {
        let s = build_g2().unwrap();
        let expect = MultiForm::from_labels(
            7,
            4,
            &[
                (1.0, &[4, 5, 6, 7]),
                (1.0, &[2, 3, 6, 7]),
                (-1.0, &[2, 3, 4, 5]),
                (1.0, &[1, 3, 5, 7]),
                (1.0, &[1, 3, 4, 6]),
                (1.0, &[1, 2, 5, 6]),
                (-1.0, &[1, 2, 4, 7]),
            ],
        );
        assert!(s.form("star_psi").unwrap().approx_eq(&expect, 1e-15));
    }

    #[test]
    fn spin7_contains_g2() {
        // i_{e_1}Φ is the G2 form on the remaining seven directions.
        let phi = spin7_form();
        let contracted = phi.interior_basis(0).restrict(&[1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(contracted, g2_form());
    }

    #[test]
    fn spin7_self_dual() {
        let s = build_spin7().unwrap();
        let phi = s.form("Phi").unwrap();
        assert_eq!(phi.hodge_star(&s.metric).unwrap(), *phi);
    }
}

//! Registry of the homogeneous geometries used by the scenarios.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::algebraic::AloffWallach;
use super::g2::g2_connection;
use super::hermitian::{su_connection, AlmostHermitian};
use super::{CoframeAlgebra, FrameConnection};
use crate::canonical::{
    g2_form, holomorphic_volume, kahler_form, spin7_form, unitary_j, unitary_orientation,
};
use crate::error::{Error, Result};
use crate::exterior::{ComplexForm, FrameMetric, MultiForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CalibrationKind {
    SpecialLagrangian,
    Associative,
    Coassociative,
    Cayley,
    /// Lagrangian submanifold of a nearly Kähler six-manifold.
    NearlyKahlerLagrangian,
    DegreeOne,
}

/// A calibrated sub-frame of a preset. `frame` (if any) is an adapted frame
/// change f_j = Σ_A frame[(A,j)] e_A, and `tangent` indexes the new frame.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingSpec {
    pub name: String,
    pub kind: CalibrationKind,
    #[serde(skip)]
    pub frame: Option<DMatrix<f64>>,
    pub tangent: Vec<usize>,
    /// Kernel dimension of the invariant deformation system.
    pub expected_kernel: Option<usize>,
    /// Normal directions whose right-invariant fields are claimed solutions.
    pub right_invariant_candidates: Vec<usize>,
    /// Constant fields claimed to be solutions (in the adapted frame).
    pub constant_candidates: Vec<Vec<f64>>,
}

impl EmbeddingSpec {
    fn new(name: &str, kind: CalibrationKind, tangent: Vec<usize>, expected: Option<usize>) -> Self {
        EmbeddingSpec {
            name: name.to_string(),
            kind,
            frame: None,
            tangent,
            expected_kernel: expected,
            right_invariant_candidates: vec![],
            constant_candidates: vec![],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeclaredConnection {
    pub name: String,
    #[serde(skip)]
    pub conn: FrameConnection,
    /// Names of forms (and "J") declared parallel.
    pub parallel: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub enum AlgebraicData {
    SquashedS7 { lambda: f64 },
    AloffWallach(AloffWallach),
    S6Pointwise,
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: String,
    pub summary: String,
    /// Coframe the invariant calculus runs on (reduced for homogeneous spaces).
    pub cf: Option<CoframeAlgebra>,
    /// Full Lie algebra including stabilizer directions, when cf is reduced.
    pub extended: Option<CoframeAlgebra>,
    pub j: Option<DMatrix<f64>>,
    pub forms: BTreeMap<String, MultiForm>,
    pub connection: Option<DeclaredConnection>,
    pub embeddings: Vec<EmbeddingSpec>,
    pub algebraic: Option<AlgebraicData>,
    /// Expected scalar invariants (e.g. the nearly parallel constant).
    pub constants: BTreeMap<String, f64>,
}

impl Preset {
    fn coframe(name: &str, summary: &str, cf: CoframeAlgebra) -> Self {
        Preset {
            name: name.to_string(),
            summary: summary.to_string(),
            cf: Some(cf),
            extended: None,
            j: None,
            forms: BTreeMap::new(),
            connection: None,
            embeddings: vec![],
            algebraic: None,
            constants: BTreeMap::new(),
        }
    }

    fn algebraic(name: &str, summary: &str, data: AlgebraicData) -> Self {
        Preset {
            name: name.to_string(),
            summary: summary.to_string(),
            cf: None,
            extended: None,
            j: None,
            forms: BTreeMap::new(),
            connection: None,
            embeddings: vec![],
            algebraic: Some(data),
            constants: BTreeMap::new(),
        }
    }

    pub fn coframe_algebra(&self) -> Result<&CoframeAlgebra> {
        self.cf.as_ref().ok_or_else(|| Error::InvalidInput(format!("preset `{}` has no coframe", self.name)))
    }

    pub fn form(&self, name: &str) -> Result<&MultiForm> {
        self.forms
            .get(name)
            .ok_or_else(|| Error::InvalidInput(format!("preset `{}` has no form `{name}`", self.name)))
    }

    pub fn embedding(&self, name: &str) -> Result<&EmbeddingSpec> {
        self.embeddings
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::InvalidInput(format!("preset `{}` has no embedding `{name}`", self.name)))
    }

    /// Holomorphic volume form assembled from Re_psi and Im_psi.
    pub fn psi_complex(&self) -> Result<ComplexForm> {
        Ok(ComplexForm::new(self.form("Re_psi")?.clone(), self.form("Im_psi")?.clone()))
    }

    pub fn hermitian(&self) -> Result<AlmostHermitian> {
        let j = self.j.clone().ok_or_else(|| Error::InvalidInput(format!("preset `{}` has no J", self.name)))?;
        AlmostHermitian::new(self.coframe_algebra()?.clone(), j)
    }

    /// max over declared parallel objects of |∇ object|.
    pub fn parallel_defects(&self) -> Result<Vec<(String, f64)>> {
        let Some(dc) = &self.connection else { return Ok(vec![]) };
        let mut out = Vec::new();
        for name in &dc.parallel {
            let defect = if name == "J" {
                let j = self.j.as_ref().ok_or_else(|| Error::InvalidInput("J declared parallel but absent".into()))?;
                dc.conn.endomorphism_derivative(j).iter().map(|m| m.abs().max()).fold(0.0, f64::max)
            } else if name == "g" {
                dc.conn.metric_defect(self.coframe_algebra()?.metric().matrix())
            } else {
                dc.conn.parallel_defect(self.form(name)?)
            };
            out.push((name.clone(), defect));
        }
        Ok(out)
    }

    pub fn export(&self) -> PresetExport {
        let (dim, labels, structure, metric) = match &self.cf {
            Some(cf) => {
                let n = cf.dim();
                let mut entries = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        for c in (b + 1)..n {
                            let v = cf.c(a, b, c);
                            if v != 0.0 {
                                entries.push(StructureEntry { upper: a + 1, lower: [b + 1, c + 1], value: v });
                            }
                        }
                    }
                }
                let m = cf.metric().matrix();
                let rows = (0..n).map(|r| m.row(r).iter().copied().collect()).collect();
                (n, cf.labels().to_vec(), entries, rows)
            }
            None => (0, vec![], vec![], vec![]),
        };
        let forms = self
            .forms
            .iter()
            .map(|(k, f)| {
                let terms = f
                    .terms()
                    .map(|(b, c)| FormTerm { coeff: c, indices: crate::exterior::blade_indices(b).iter().map(|i| i + 1).collect() })
                    .collect();
                (k.clone(), terms)
            })
            .collect();
        PresetExport {
            name: self.name.clone(),
            summary: self.summary.clone(),
            dim,
            labels,
            structure_constants: structure,
            metric,
            orientation: self.cf.as_ref().map(|c| c.metric().orientation).unwrap_or(1),
            complex_structure: self.j.as_ref().map(|j| (0..j.nrows()).map(|r| j.row(r).iter().copied().collect()).collect()),
            forms,
            connection: self.connection.clone(),
            embeddings: self.embeddings.clone(),
            algebraic: self.algebraic.clone(),
            constants: self.constants.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureEntry {
    pub upper: usize,
    pub lower: [usize; 2],
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FormTerm {
    pub coeff: f64,
    pub indices: Vec<usize>,
}

/// Audit document: 1-based indices, c^A_{BC} listed for B < C.
#[derive(Clone, Debug, Serialize)]
pub struct PresetExport {
    pub name: String,
    pub summary: String,
    pub dim: usize,
    pub labels: Vec<String>,
    pub structure_constants: Vec<StructureEntry>,
    pub metric: Vec<Vec<f64>>,
    pub orientation: i8,
    pub complex_structure: Option<Vec<Vec<f64>>>,
    pub forms: BTreeMap<String, Vec<FormTerm>>,
    pub connection: Option<DeclaredConnection>,
    pub embeddings: Vec<EmbeddingSpec>,
    pub algebraic: Option<AlgebraicData>,
    pub constants: BTreeMap<String, f64>,
}

pub const NAMES: &[&str] = &[
    "s3",
    "hopf_s3",
    "s3xs3_hermitian",
    "s3xs3_almost_hermitian",
    "gxg_su2",
    "spin4_b13",
    "flag_f12",
    "g2_group",
    "cayley_group",
    "iwasawa",
    "so5_so3",
    "aw_n11",
    "s7_squashed",
    "s6_pointwise",
];

pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "s3" => s3(),
        "hopf_s3" => hopf_s3(),
        "s3xs3_hermitian" => s3xs3_hermitian(),
        "s3xs3_almost_hermitian" => s3xs3_almost_hermitian(),
        "gxg_su2" => gxg(&CoframeAlgebra::su2(), "gxg_su2"),
        "spin4_b13" => spin4_b13(),
        "flag_f12" => flag_f12(),
        "g2_group" => g2_group(),
        "cayley_group" => cayley_group(),
        "iwasawa" => iwasawa(),
        "so5_so3" => so5_so3(),
        "aw_n11" => aw_nm(1, 1),
        "s7_squashed" => Ok(Preset::algebraic(
            "s7_squashed",
            "squashed S⁷ nearly parallel conditions in (y, z)",
            AlgebraicData::SquashedS7 { lambda: -3.0 },
        )),
        "s6_pointwise" => Ok(Preset::algebraic(
            "s6_pointwise",
            "Kähler form i_x φ on T_x S⁶ at sampled unit x",
            AlgebraicData::S6Pointwise,
        )),
        _ => Err(Error::UnknownPreset { name: name.to_string(), available: NAMES.join(", ") }),
    }
}

fn labels(prefix: &[&str]) -> Vec<String> {
    prefix.iter().map(|s| s.to_string()).collect()
}

fn sigma_pair() -> Result<CoframeAlgebra> {
    let s = CoframeAlgebra::su2();
    Ok(CoframeAlgebra::direct_sum(&[&s, &s])?.with_labels(&["σ1", "σ2", "σ3", "σ̃1", "σ̃2", "σ̃3"]))
}

/// Unitary SU(n) package for a coframe whose frame is already unitary.
fn unitary_forms(p: &mut Preset, psi: &ComplexForm) -> Result<()> {
    let cf = p.coframe_algebra()?;
    let n = cf.dim() / 2;
    let j = unitary_j(n);
    let omega = kahler_form(cf.metric(), &j);
    p.forms.insert("Omega".into(), omega);
    p.forms.insert("Re_psi".into(), psi.re.clone());
    p.forms.insert("Im_psi".into(), psi.im.clone());
    p.j = Some(j);
    Ok(())
}

fn flat_left(p: &mut Preset, parallel: &[&str]) -> Result<()> {
    let cf = p.coframe_algebra()?;
    p.connection = Some(DeclaredConnection {
        name: "flat_left".into(),
        conn: FrameConnection::flat_left(cf),
        parallel: parallel.iter().map(|s| s.to_string()).collect(),
    });
    Ok(())
}

fn s3() -> Result<Preset> {
    let mut p = Preset::coframe("s3", "SU(2) with dσ¹ = −σ²∧σ³", CoframeAlgebra::su2().with_labels(&["σ1", "σ2", "σ3"]));
    flat_left(&mut p, &["g"])?;
    Ok(p)
}

fn hopf_s3() -> Result<Preset> {
    let mut p = s3()?;
    p.name = "hopf_s3".into();
    p.summary = "S³ with the degree-one form σ³ calibrating the Hopf fibres".into();
    p.forms.insert("sigma3".into(), MultiForm::basis(3, &[2]));
    flat_left(&mut p, &["g", "sigma3"])?;
    p.embeddings.push(EmbeddingSpec::new("hopf_fibre", CalibrationKind::DegreeOne, vec![2], None));
    Ok(p)
}

fn s3xs3_hermitian() -> Result<Preset> {
    let base = sigma_pair()?;
    // e1=σ1, e2=σ̃1, e3=σ3, e1'=σ2, e2'=−σ̃2, e3'=σ̃3
    let cols: [(usize, f64); 6] = [(0, 1.0), (3, 1.0), (2, 1.0), (1, 1.0), (4, -1.0), (5, 1.0)];
    let mut q = DMatrix::zeros(6, 6);
    for (j, (i, s)) in cols.iter().enumerate() {
        q[(*i, j)] = *s;
    }
    let cf = base
        .change_frame(&q)?
        .with_metric(FrameMetric::identity(6).with_orientation(unitary_orientation(3)))?
        .with_labels(&["e1", "e2", "e3", "e1'", "e2'", "e3'"]);
    let mut p = Preset::coframe(
        "s3xs3_hermitian",
        "S³×S³ with Ω = σ¹²−σ̃¹²+σ³∧σ̃³ and the left-action connection",
        cf,
    );
    let psi = holomorphic_volume(3).scaled(Complex64::from_polar(1.0, FRAC_PI_4));
    unitary_forms(&mut p, &psi)?;
    flat_left(&mut p, &["g", "J", "Omega", "Re_psi", "Im_psi"])?;
    // diagonal: t = (σ+σ̃)/√2, n = (σ−σ̃)/√2, written in the unitary frame
    let r = 1.0 / SQRT_2;
    let adapted: [[(usize, f64); 2]; 6] = [
        [(0, r), (1, r)],
        [(3, r), (4, -r)],
        [(2, r), (5, r)],
        [(0, r), (1, -r)],
        [(3, r), (4, r)],
        [(2, r), (5, -r)],
    ];
    let mut f = DMatrix::zeros(6, 6);
    for (j, col) in adapted.iter().enumerate() {
        for (i, v) in col {
            f[(*i, j)] = *v;
        }
    }
    let mut diag = EmbeddingSpec::new("diagonal", CalibrationKind::SpecialLagrangian, vec![0, 1, 2], Some(0));
    diag.frame = Some(f);
    diag.right_invariant_candidates = vec![3, 4, 5];
    p.embeddings.push(diag);
    Ok(p)
}

/// G×G with e^a = σ^a on the first factor and e^{a'} = σ̃^a on the second.
pub fn gxg(g: &CoframeAlgebra, name: &str) -> Result<Preset> {
    let k = g.dim();
    if !g.is_lie() {
        return Err(Error::InvalidInput("G×G needs a Lie algebra".into()));
    }
    let cf = CoframeAlgebra::direct_sum(&[g, g])?
        .with_metric(FrameMetric::identity(2 * k).with_orientation(unitary_orientation(k)))?;
    let mut p = Preset::coframe(name, "G×G with J exchanging the factors; G×{e} special Lagrangian", cf);
    unitary_forms(&mut p, &holomorphic_volume(k))?;
    flat_left(&mut p, &["g", "J", "Omega", "Re_psi", "Im_psi"])?;
    p.embeddings.push(EmbeddingSpec::new(
        "first_factor",
        CalibrationKind::SpecialLagrangian,
        (0..k).collect(),
        Some(k),
    ));
    Ok(p)
}

fn s3xs3_almost_hermitian() -> Result<Preset> {
    let mut p = gxg(&CoframeAlgebra::su2(), "s3xs3_almost_hermitian")?;
    p.summary = "S³×S³ with e^a = σ^a, e^{a'} = σ̃^a and ψ = ∏(σ^a + iσ̃^a)".into();
    p.cf = Some(p.cf.take().unwrap().with_labels(&["σ1", "σ2", "σ3", "σ̃1", "σ̃2", "σ̃3"]));
    Ok(p)
}

/// ψ = ± ∏_{a ∈ rows} (e^a + i e^a∘J), with the sign making Re ψ = 1 on `plane`.
pub fn psi_from_rows(j: &DMatrix<f64>, rows: &[usize], plane: &[usize]) -> Result<ComplexForm> {
    let n = j.nrows();
    let mut psi = ComplexForm::scalar(n, Complex64::new(1.0, 0.0));
    for &a in rows {
        let re = MultiForm::basis(n, &[a]);
        let im = MultiForm::one_form(&j.row(a).iter().copied().collect::<Vec<_>>());
        psi = psi.wedge(&ComplexForm::new(re, im))?;
    }
    let v = psi.re.component(plane);
    let w = psi.im.component(plane);
    if (v.abs() - 1.0).abs() > 1e-12 || w.abs() > 1e-12 {
        return Err(Error::Precondition { what: "ψ real and unit on the reference plane".into(), residual: (v.abs() - 1.0).abs().max(w.abs()) });
    }
    Ok(if v < 0.0 { psi.scaled(Complex64::new(-1.0, 0.0)) } else { psi })
}

fn hermitian_su(p: &mut Preset, psi: &ComplexForm) -> Result<()> {
    let h = p.hermitian()?;
    let conn = su_connection(&h.hermitian_connection(), &h.j, psi)?;
    p.forms.insert("Omega".into(), h.omega.clone());
    p.forms.insert("Re_psi".into(), psi.re.clone());
    p.forms.insert("Im_psi".into(), psi.im.clone());
    p.connection = Some(DeclaredConnection {
        name: "hermitian_su".into(),
        conn,
        parallel: ["g", "J", "Omega", "Re_psi", "Im_psi"].iter().map(|s| s.to_string()).collect(),
    });
    Ok(())
}

fn elementary(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m[(j, i)] = -1.0;
    m
}

fn spin4_b13() -> Result<Preset> {
    let s3 = 3f64.sqrt();
    let basis = vec![
        elementary(4, 0, 1) * s3,
        elementary(4, 0, 2) * s3,
        elementary(4, 1, 2) * s3,
        elementary(4, 0, 3),
        elementary(4, 1, 3),
        elementary(4, 2, 3),
    ];
    let cf = CoframeAlgebra::from_matrices(&basis, FrameMetric::identity(6), labels(&["e1", "e2", "e3", "e4", "e5", "e6"]))?;
    let omega = MultiForm::from_labels(6, 2, &[(-1.0, &[1, 6]), (1.0, &[2, 5]), (-1.0, &[3, 4])]);
    let j = crate::canonical::two_form_matrix(&omega);
    let mut p = Preset::coframe("spin4_b13", "Spin(4) with the B₁/₃ metric and its nearly Kähler structure", cf);
    p.j = Some(j.clone());
    let psi = psi_from_rows(&j, &[5, 1, 3], &[0, 1, 2])?;
    hermitian_su(&mut p, &psi)?;
    p.embeddings.push(EmbeddingSpec::new(
        "so3_lagrangian",
        CalibrationKind::NearlyKahlerLagrangian,
        vec![0, 1, 2],
        None,
    ));
    Ok(p)
}

fn flag_f12() -> Result<Preset> {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let unit = |r: usize, c: usize, v: Complex64| {
        let mut m = DMatrix::from_element(3, 3, z);
        m[(r, c)] = v;
        m
    };
    let a = |r: usize, c: usize| unit(r, c, one) - unit(c, r, one);
    let s = |r: usize, c: usize| unit(r, c, i) + unit(c, r, i);
    let diag = |d: [f64; 3]| DMatrix::from_fn(3, 3, |r, c| if r == c { i * d[r] } else { z });
    let basis = vec![
        a(0, 1),
        s(0, 1),
        a(0, 2),
        s(0, 2),
        a(1, 2),
        s(1, 2),
        diag([1.0, -1.0, 0.0]),
        diag([1.0, 1.0, -2.0]) / Complex64::new(3f64.sqrt(), 0.0),
    ];
    let ext = CoframeAlgebra::from_complex_matrices(
        &basis,
        FrameMetric::identity(8),
        labels(&["e1", "e2", "e3", "e4", "e5", "e6", "h1", "h2"]),
    )?;
    let cf = ext.restrict(&[0, 1, 2, 3, 4, 5], false)?;
    let mut j = DMatrix::zeros(6, 6);
    for (x, y, sign) in [(0, 1, 1.0), (2, 3, -1.0), (4, 5, 1.0)] {
        j[(y, x)] = sign;
        j[(x, y)] = -sign;
    }
    let mut p = Preset::coframe("flag_f12", "flag manifold SU(3)/T² with its nearly Kähler structure", cf);
    p.extended = Some(ext);
    p.j = Some(j.clone());
    let psi = psi_from_rows(&j, &[1, 2, 5], &[0, 2, 4])?;
    hermitian_su(&mut p, &psi)?;
    p.embeddings.push(EmbeddingSpec::new(
        "so3_lagrangian",
        CalibrationKind::NearlyKahlerLagrangian,
        vec![0, 2, 4],
        None,
    ));
    Ok(p)
}

fn iwasawa() -> Result<Preset> {
    let n = 6;
    let mut c = vec![0.0; n * n * n];
    let mut set = |a: usize, b: usize, cc: usize, v: f64| {
        c[super::tensor_index(n, a, b, cc)] = v;
        c[super::tensor_index(n, a, cc, b)] = -v;
    };
    // indices (1,2,3,1',2',3') → 0..5
    set(2, 0, 1, 1.0);
    set(2, 3, 4, -1.0);
    set(5, 0, 4, 1.0);
    set(5, 3, 1, 1.0);
    let cf = CoframeAlgebra::new(
        n,
        c,
        FrameMetric::identity(n).with_orientation(unitary_orientation(3)),
        labels(&["e1", "e2", "e3", "e1'", "e2'", "e3'"]),
    )?;
    let mut p = Preset::coframe("iwasawa", "Iwasawa manifold with α₁∧α₂∧α₃ and its Chern connection", cf);
    unitary_forms(&mut p, &holomorphic_volume(3))?;
    flat_left(&mut p, &["g", "J", "Omega", "Re_psi", "Im_psi"])?;
    p.connection.as_mut().unwrap().name = "chern".into();
    let mut emb = EmbeddingSpec::new("alpha_plane", CalibrationKind::SpecialLagrangian, vec![0, 1, 2], None);
    emb.constant_candidates = vec![vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]];
    p.embeddings.push(emb);
    Ok(p)
}

fn g2_group() -> Result<Preset> {
    let s = CoframeAlgebra::su2();
    let one = CoframeAlgebra::flat(1);
    let cf = CoframeAlgebra::direct_sum(&[&s, &one, &s])?.with_labels(&["σ1", "σ2", "σ3", "t", "σ̃1", "σ̃2", "σ̃3"]);
    let mut p = Preset::coframe("g2_group", "S³×S¹×S̃³ with the canonical G₂ form", cf);
    let psi = g2_form();
    let star = psi.hodge_star(&FrameMetric::identity(7))?;
    p.forms.insert("psi".into(), psi);
    p.forms.insert("star_psi".into(), star);
    flat_left(&mut p, &["g", "psi", "star_psi"])?;
    p.embeddings.push(EmbeddingSpec::new("s3", CalibrationKind::Associative, vec![0, 1, 2], Some(4)));
    p.embeddings.push(EmbeddingSpec::new("s1_s3", CalibrationKind::Coassociative, vec![3, 4, 5, 6], Some(3)));
    Ok(p)
}

fn cayley_group() -> Result<Preset> {
    let s = CoframeAlgebra::su2();
    let one = CoframeAlgebra::flat(1);
    let cf = CoframeAlgebra::direct_sum(&[&one, &s, &one, &s])?
        .with_labels(&["σ0", "σ1", "σ2", "σ3", "σ̃0", "σ̃1", "σ̃2", "σ̃3"]);
    let mut p = Preset::coframe("cayley_group", "S¹×S³×S̃¹×S̃³ with the canonical Spin(7) form", cf);
    p.forms.insert("Phi".into(), spin7_form());
    flat_left(&mut p, &["g", "Phi"])?;
    p.embeddings.push(EmbeddingSpec::new("s1_s3", CalibrationKind::Cayley, vec![0, 1, 2, 3], Some(4)));
    Ok(p)
}

/// ρ_i = J_i ⊂ so(4) anti-self-dual, e_a = (2/√5) E_{a5}, σ_i self-dual.
fn so5_so3() -> Result<Preset> {
    let e = |i: usize, j: usize| elementary(5, i, j);
    let se = 2.0 / 5f64.sqrt();
    let basis = vec![
        e(0, 1) - e(2, 3),
        e(0, 2) + e(1, 3),
        e(0, 3) - e(1, 2),
        e(0, 4) * se,
        e(1, 4) * se,
        e(2, 4) * se,
        e(3, 4) * se,
        e(0, 1) + e(2, 3),
        e(0, 2) - e(1, 3),
        e(0, 3) + e(1, 2),
    ];
    let ext = CoframeAlgebra::from_matrices(
        &basis,
        FrameMetric::identity(10),
        labels(&["ρ1", "ρ2", "ρ3", "e1", "e2", "e3", "e4", "σ1", "σ2", "σ3"]),
    )?;
    let cf = ext.restrict(&[0, 1, 2, 3, 4, 5, 6], false)?;
    let mut p = Preset::coframe("so5_so3", "SO(5)/SO(3) nearly parallel G₂ structure", cf);
    let psi = g2_form();
    let star = psi.hodge_star(&FrameMetric::identity(7))?;
    let conn = g2_connection(p.coframe_algebra()?, &psi)?;
    p.forms.insert("psi".into(), psi);
    p.forms.insert("star_psi".into(), star);
    p.connection = Some(DeclaredConnection {
        name: "g2".into(),
        conn,
        parallel: ["g", "psi", "star_psi"].iter().map(|s| s.to_string()).collect(),
    });
    p.extended = Some(ext);
    p.constants.insert("lambda".into(), -12.0 / 5.0);
    p.embeddings.push(EmbeddingSpec::new("s3_fibre", CalibrationKind::Associative, vec![0, 1, 2], None));
    Ok(p)
}

pub fn aw_nm(n: i64, m: i64) -> Result<Preset> {
    let aw = AloffWallach::new(n, m)?;
    Ok(Preset::algebraic(
        &format!("aw_n{n}{m}"),
        "Aloff–Wallach N(n,m) nearly parallel conditions in (x, y, z, f)",
        AlgebraicData::AloffWallach(aw),
    ))
}

/// Lifts a form on the reduced coframe to the extended one (zero on the extra directions).
pub fn lift_form(form: &MultiForm, ext_dim: usize) -> MultiForm {
    let mut out = MultiForm::zero(ext_dim, form.degree());
    for (b, c) in form.terms() {
        out.add_blade(b, c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds() {
        for name in NAMES {
            let p = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&p.name, name);
        }
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset { .. })));
    }

    #[test]
    fn declared_connections_are_parallel() {
        for name in NAMES {
            let p = preset(name).unwrap();
            for (what, d) in p.parallel_defects().unwrap() {
                assert!(d < 1e-12, "{name}: ∇{what} = {d:e}");
            }
        }
    }

    #[test]
    fn jacobi_on_full_algebras() {
        for name in NAMES {
            let p = preset(name).unwrap();
            if let Some(ext) = &p.extended {
                assert!(ext.jacobi_defect() < 1e-12, "{name}");
            } else if let Some(cf) = &p.cf {
                assert!(cf.is_lie() && cf.jacobi_defect() < 1e-12, "{name}");
            }
        }
    }

    #[test]
    fn hermitian_metric_is_standard() {
        let p = preset("s3xs3_hermitian").unwrap();
        let cf = p.cf.as_ref().unwrap();
        assert!(cf.metric().is_identity());
        // dσ¹ = −σ²∧σ³ in the unitary frame: de1 = −e1'∧e3
        assert_eq!(cf.d_basis(0), MultiForm::basis(6, &[3, 2]).scaled(-1.0));
    }

    #[test]
    fn iwasawa_only_alpha3_is_not_closed() {
        let p = preset("iwasawa").unwrap();
        let cf = p.cf.as_ref().unwrap();
        let psi = p.psi_complex().unwrap();
        assert!(cf.d_complex(&psi).max_abs() < 1e-15);
        for a in [0, 1, 3, 4] {
            assert!(cf.d_basis(a).is_empty());
        }
    }

    #[test]
    fn so5_so3_is_nearly_parallel_and_sigma_free() {
        let p = preset("so5_so3").unwrap();
        let cf = p.cf.as_ref().unwrap();
        let psi = p.form("psi").unwrap();
        let star = p.form("star_psi").unwrap();
        let dpsi = cf.d(psi);
        assert!((&dpsi - &star.scaled(-12.0 / 5.0)).max_abs() < 1e-12, "{dpsi:?}");
        let ext = p.extended.as_ref().unwrap();
        let full = ext.d(&lift_form(psi, 10));
        assert!((&full - &lift_form(&dpsi, 10)).max_abs() < 1e-12);
    }

    #[test]
    fn flag_basis_is_unit() {
        let p = preset("flag_f12").unwrap();
        assert!(p.extended.as_ref().unwrap().jacobi_defect() < 1e-12);
        assert!(p.form("Omega").unwrap().approx_eq(
            &MultiForm::from_labels(6, 2, &[(-1.0, &[1, 2]), (1.0, &[3, 4]), (-1.0, &[5, 6])]),
            1e-15
        ));
    }

    #[test]
    fn export_lists_structure() {
        let e = preset("iwasawa").unwrap().export();
        assert_eq!(e.structure_constants.len(), 4);
        assert_eq!(e.dim, 6);
    }
}

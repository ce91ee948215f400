//! Linear deformation systems of calibrated sub-frames and their kernels.
//!
//! Unknowns are normal fields V. Every system is written as a linear map of
//! the jet D[(A,B)] = ∇̃_B V^A, so the same template gives the invariant
//! sector (D = ω̃ V), the principal symbol (D = V ⊗ ξ) and pointwise checks
//! of non-invariant fields.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::canonical::spin7_tau;
use crate::coframe::adjoint::{right_invariant, FieldJet, GroupPoint};
use crate::coframe::presets::{CalibrationKind, Preset};
use crate::coframe::{lie_from_jet, lie_derivative_cartan, CoframeAlgebra, FrameConnection};
use crate::error::{Error, Result};
use crate::exterior::{blades, MultiForm};
use crate::linalg::{kernel_report, KernelReport};
use crate::rng;

pub const CRITERION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SystemKind {
    Sas,
    Associative,
    Coassociative,
    Cayley,
    NkSas,
}

/// Encoding of a deformation system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Route {
    /// Index form in terms of ∇̃V.
    Index,
    /// Lie derivative of the parallel calibrating forms, L_V χ = ∇̃_B V^A e^B ∧ i_A χ.
    Lie,
    /// d(i_V χ) + i_V dχ for invariant V (for coassociative: the α_V form).
    Cartan,
    /// SAS only: equations for U = J V with the torsion forms.
    UForm,
}

#[derive(Clone, Debug)]
pub struct CalibratedEmbedding {
    pub name: String,
    pub kind: CalibrationKind,
    pub ambient: CoframeAlgebra,
    pub tangent: Vec<usize>,
    pub normal: Vec<usize>,
    pub forms: BTreeMap<String, MultiForm>,
    pub j: Option<DMatrix<f64>>,
    pub connection: FrameConnection,
    pub tilde: FrameConnection,
    /// True when the adapted frame coincides with the preset frame.
    pub canonical_frame: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeformationSystem {
    pub kind: SystemKind,
    pub route: Route,
    #[serde(serialize_with = "crate::linalg::serialize_matrix")]
    pub matrix: DMatrix<f64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl DeformationSystem {
    pub fn kernel(&self, rel_tol: f64) -> KernelReport {
        kernel_report(&self.matrix, rel_tol, 100.0)
    }

    /// Whitespace-separated rows for external audit.
    pub fn to_text(&self) -> String {
        let mut s = format!("# {:?} {:?} {}x{}\n", self.kind, self.route, self.matrix.nrows(), self.matrix.ncols());
        for r in 0..self.matrix.nrows() {
            let row: Vec<String> = self.matrix.row(r).iter().map(|v| format!("{v:.17e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Ordered tangent pairs (a, b) with a before b.
fn pair_labels(t: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for p in 0..t.len() {
        for q in (p + 1)..t.len() {
            out.push((t[p], t[q]));
        }
    }
    out
}

fn form_components(f: &MultiForm) -> Vec<f64> {
    blades(f.dim(), f.degree()).into_iter().map(|b| f.coeff_blade(b)).collect()
}

impl CalibratedEmbedding {
    pub fn from_preset(p: &Preset, embedding: &str) -> Result<Self> {
        let spec = p.embedding(embedding)?;
        let cf = p.coframe_algebra()?;
        let dc = p
            .connection
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("preset `{}` declares no connection", p.name)))?;
        let (ambient, forms, j, conn) = match &spec.frame {
            None => (cf.clone(), p.forms.clone(), p.j.clone(), dc.conn.clone()),
            Some(q) => {
                let inv = q.clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular adapted frame".into()))?;
                let amb = cf.change_frame(q)?;
                let forms = p
                    .forms
                    .iter()
                    .map(|(k, f)| Ok((k.clone(), f.transform(q)?)))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                let j = p.j.as_ref().map(|j| &inv * j * q);
                (amb, forms, j, dc.conn.change_frame(q)?)
            }
        };
        let n = ambient.dim();
        let normal: Vec<usize> = (0..n).filter(|i| !spec.tangent.contains(i)).collect();
        let tilde = conn.tilde(&ambient);
        let emb = CalibratedEmbedding {
            name: format!("{}/{}", p.name, spec.name),
            kind: spec.kind,
            ambient,
            tangent: spec.tangent.clone(),
            normal,
            forms,
            j,
            connection: conn,
            tilde,
            canonical_frame: spec.frame.is_none(),
        };
        let worst = emb.criterion()?.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        if worst > CRITERION_TOL {
            return Err(Error::Precondition { what: format!("calibration criterion on {}", emb.name), residual: worst });
        }
        Ok(emb)
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn form(&self, name: &str) -> Result<&MultiForm> {
        self.forms.get(name).ok_or_else(|| Error::InvalidInput(format!("{} has no form `{name}`", self.name)))
    }

    fn j(&self) -> Result<&DMatrix<f64>> {
        self.j.as_ref().ok_or_else(|| Error::InvalidInput(format!("{} has no complex structure", self.name)))
    }

    /// Type-specific vanishing conditions on the tangent frame, with residuals.
    pub fn criterion(&self) -> Result<Vec<(String, f64)>> {
        let t = &self.tangent;
        let unit = |f: &MultiForm| (f.restrict(t).max_abs() - 1.0).abs();
        Ok(match self.kind {
            CalibrationKind::SpecialLagrangian | CalibrationKind::NearlyKahlerLagrangian => vec![
                ("Omega|X".into(), self.form("Omega")?.restrict(t).max_abs()),
                ("Im_psi|X".into(), self.form("Im_psi")?.restrict(t).max_abs()),
                ("Re_psi(X)-1".into(), unit(self.form("Re_psi")?)),
            ],
            CalibrationKind::Associative => {
                let star = self.form("star_psi")?;
                let chi = (0..self.dim()).map(|k| star.interior_basis(k).restrict(t).max_abs()).fold(0.0, f64::max);
                vec![("chi|X".into(), chi), ("psi(X)-1".into(), unit(self.form("psi")?))]
            }
            CalibrationKind::Coassociative => vec![
                ("psi|X".into(), self.form("psi")?.restrict(t).max_abs()),
                ("star_psi(X)-1".into(), unit(self.form("star_psi")?)),
            ],
            CalibrationKind::Cayley => {
                let tau = self.tau()?;
                let m = tau.iter().map(|f| f.restrict(t).max_abs()).fold(0.0, f64::max);
                vec![("tau|X".into(), m), ("Phi(X)-1".into(), unit(self.form("Phi")?))]
            }
            CalibrationKind::DegreeOne => {
                let (name, f) = self.forms.iter().find(|(_, f)| f.degree() == t.len()).ok_or_else(|| {
                    Error::InvalidInput("no form of the calibrated degree".into())
                })?;
                vec![(format!("{name}(X)-1"), unit(f))]
            }
        })
    }

    fn tau(&self) -> Result<Vec<MultiForm>> {
        if !self.canonical_frame {
            return Err(Error::InvalidInput("τ is tabulated in the canonical Spin(7) frame only".into()));
        }
        Ok(spin7_tau().components().to_vec())
    }

    /// Normal vector V (coefficients on `normal`) as an ambient vector.
    pub fn embed_normal(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (k, &i) in self.normal.iter().enumerate() {
            out[i] = v[k];
        }
        out
    }

    /// ∇̃ jet of a constant-coefficient normal field.
    pub fn invariant_jet(&self, v: &[f64]) -> DMatrix<f64> {
        self.tilde.invariant_jet(&self.embed_normal(v))
    }

    /// Principal-symbol jet D = V ⊗ ξ with ξ on the tangent directions.
    pub fn symbol_jet(&self, v: &[f64], xi: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut d = DMatrix::zeros(n, n);
        for (k, &a) in self.normal.iter().enumerate() {
            for (l, &b) in self.tangent.iter().enumerate() {
                d[(a, b)] = v[k] * xi[l];
            }
        }
        d
    }

    fn expected_kind(&self, kind: SystemKind) -> Result<()> {
        let ok = matches!(
            (kind, self.kind),
            (SystemKind::Sas, CalibrationKind::SpecialLagrangian)
                | (SystemKind::Sas, CalibrationKind::NearlyKahlerLagrangian)
                | (SystemKind::NkSas, CalibrationKind::NearlyKahlerLagrangian)
                | (SystemKind::Associative, CalibrationKind::Associative)
                | (SystemKind::Coassociative, CalibrationKind::Coassociative)
                | (SystemKind::Cayley, CalibrationKind::Cayley)
        );
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{:?} system does not apply to a {:?} embedding", kind, self.kind)))
        }
    }

    /// Constraint values for a jet, index encoding.
    pub fn apply_index(&self, kind: SystemKind, d: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.expected_kind(kind)?;
        let t = &self.tangent;
        let nn = &self.normal;
        Ok(match kind {
            SystemKind::Sas => {
                let om = self.form("Omega")?;
                let j = self.j()?;
                let mut rows: Vec<f64> = pair_labels(t)
                    .into_iter()
                    .map(|(a, b)| nn.iter().map(|&c| d[(c, a)] * om.component(&[c, b]) - d[(c, b)] * om.component(&[c, a])).sum())
                    .collect();
                rows.push(t.iter().flat_map(|&a| nn.iter().map(move |&c| (a, c))).map(|(a, c)| d[(c, a)] * j[(a, c)]).sum());
                rows
            }
            SystemKind::Associative => {
                let psi = self.form("psi")?;
                nn.iter()
                    .map(|&a| {
                        let mut s = 0.0;
                        for &i in t {
                            for &b in nn {
                                s += psi.component(&[i, a, b]) * d[(b, i)];
                            }
                        }
                        s
                    })
                    .collect()
            }
            SystemKind::Coassociative => {
                let psi = self.form("psi")?;
                let mut acc = MultiForm::zero(self.dim(), 3);
                for &i in nn {
                    let mut theta = vec![0.0; self.dim()];
                    for &c in t {
                        theta[c] = d[(i, c)];
                    }
                    acc += &psi.interior_basis(i).wedge(&MultiForm::one_form(&theta))?;
                }
                form_components(&acc.restrict(t))
            }
            SystemKind::Cayley => {
                let phi = self.form("Phi")?;
                if t.len() != 4 {
                    return Err(Error::InvalidInput("Cayley planes are 4-dimensional".into()));
                }
                nn.iter()
                    .map(|&i| {
                        let mut s = 0.0;
                        for (r, &a) in t.iter().enumerate() {
                            for &jx in nn {
                                let coeff = if r == 0 {
                                    if i == jx {
                                        1.0
                                    } else {
                                        0.0
                                    }
                                } else {
                                    phi.component(&[t[0], a, i, jx])
                                };
                                s += coeff * d[(jx, a)];
                            }
                        }
                        s
                    })
                    .collect()
            }
            SystemKind::NkSas => return Err(Error::InvalidInput("NK-SAS is posed for U = JV; use nk_sas_system".into())),
        })
    }

    /// Constraint values for a jet, Lie-derivative encoding.
    pub fn apply_lie(&self, kind: SystemKind, d: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.expected_kind(kind)?;
        let t = &self.tangent;
        let lie = |name: &str| -> Result<MultiForm> { lie_from_jet(self.form(name)?, d) };
        Ok(match kind {
            SystemKind::Sas => {
                let mut v = form_components(&lie("Omega")?.restrict(t));
                v.extend(form_components(&lie("Im_psi")?.restrict(t)));
                v
            }
            SystemKind::Associative => {
                let l = lie("star_psi")?;
                (0..self.dim()).flat_map(|k| form_components(&l.interior_basis(k).restrict(t))).collect()
            }
            SystemKind::Coassociative => form_components(&lie("psi")?.restrict(t)),
            SystemKind::Cayley => {
                let mut out = Vec::new();
                for tau in self.tau()? {
                    out.extend(form_components(&lie_from_jet(&tau, d)?.restrict(t)));
                }
                out
            }
            SystemKind::NkSas => return Err(Error::InvalidInput("NK-SAS has no Lie encoding here".into())),
        })
    }

    /// Cartan-formula encoding for a constant normal field.
    pub fn apply_cartan(&self, kind: SystemKind, v: &[f64]) -> Result<Vec<f64>> {
        self.expected_kind(kind)?;
        let t = &self.tangent;
        let vv = self.embed_normal(v);
        let cartan = |f: &MultiForm| lie_derivative_cartan(&self.ambient, &vv, f);
        Ok(match kind {
            SystemKind::Sas => {
                let mut out = form_components(&cartan(self.form("Omega")?)?.restrict(t));
                out.extend(form_components(&cartan(self.form("Im_psi")?)?.restrict(t)));
                out
            }
            SystemKind::Associative => {
                let l = cartan(self.form("star_psi")?)?;
                (0..self.dim()).flat_map(|k| form_components(&l.interior_basis(k).restrict(t))).collect()
            }
            SystemKind::Coassociative => form_components(&cartan(self.form("psi")?)?.restrict(t)),
            SystemKind::Cayley => {
                let mut out = Vec::new();
                for tau in self.tau()? {
                    out.extend(form_components(&cartan(&tau)?.restrict(t)));
                }
                out
            }
            SystemKind::NkSas => return Err(Error::InvalidInput("NK-SAS has no Cartan encoding here".into())),
        })
    }

    /// α_V = (i_V ψ)|_X for a coassociative embedding.
    pub fn alpha(&self, v: &[f64]) -> Result<MultiForm> {
        self.expected_kind(SystemKind::Coassociative)?;
        Ok(self.form("psi")?.interior(&self.embed_normal(v))?.restrict(&self.tangent))
    }

    /// |*α_V + α_V| on X, oriented by *ψ.
    pub fn alpha_self_duality_defect(&self, v: &[f64]) -> Result<f64> {
        let a = self.alpha(v)?;
        let metric = crate::exterior::FrameMetric::identity(self.tangent.len());
        Ok((&a.hodge_star(&metric)? + &a).max_abs())
    }

    pub fn system(&self, kind: SystemKind, route: Route) -> Result<DeformationSystem> {
        if kind == SystemKind::NkSas {
            return self.nk_sas_system();
        }
        let m = self.normal.len();
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let mut v = vec![0.0; m];
                v[k] = 1.0;
                match route {
                    Route::Index => self.apply_index(kind, &self.invariant_jet(&v)),
                    Route::Lie => self.apply_lie(kind, &self.invariant_jet(&v)),
                    Route::Cartan => self.apply_cartan(kind, &v),
                    Route::UForm => self.apply_u_form(&v),
                }
            })
            .collect::<Result<_>>()?;
        let rows = cols.first().map(|c| c.len()).unwrap_or(0);
        let matrix = DMatrix::from_fn(rows, m, |r, c| cols[c][r]);
        Ok(DeformationSystem {
            kind,
            route,
            matrix,
            row_labels: (0..rows).map(|r| format!("c{r}")).collect(),
            col_labels: self.normal.iter().map(|&i| self.ambient.labels()[i].clone()).collect(),
        })
    }

    /// Principal symbol at a tangent covector ξ (index encoding).
    pub fn symbol(&self, kind: SystemKind, xi: &[f64]) -> Result<DMatrix<f64>> {
        if xi.len() != self.tangent.len() {
            return Err(Error::DimensionMismatch { expected: self.tangent.len(), found: xi.len() });
        }
        if kind == SystemKind::NkSas {
            return Err(Error::InvalidInput("symbol of the U-system is not assembled".into()));
        }
        let m = self.normal.len();
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let mut v = vec![0.0; m];
                v[k] = 1.0;
                self.apply_index(kind, &self.symbol_jet(&v, xi))
            })
            .collect::<Result<_>>()?;
        let rows = cols[0].len();
        Ok(DMatrix::from_fn(rows, m, |r, c| cols[c][r]))
    }

    /// SAS equations for U = JV: dU − U_a(T^a + T̂^a) = 0, δU + U^a(t_a + t̂_a) = 0,
    /// on a constant normal V, with T the torsion of the declared connection.
    pub fn apply_u_form(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.expected_kind(SystemKind::Sas)?;
        let n = self.dim();
        let t = &self.tangent;
        let nn = &self.normal;
        let j = self.j()?;
        let om = self.form("Omega")?;
        let vv = self.embed_normal(v);
        // U^a = J^a_{b'} V^{b'}
        let u: Vec<f64> = (0..n).map(|a| if t.contains(&a) { nn.iter().map(|&b| j[(a, b)] * vv[b]).sum() } else { 0.0 }).collect();
        let torsion = self.connection.torsion(&self.ambient);
        let tt = |a: usize, b: usize, c: usize| torsion[crate::coframe::tensor_index(n, a, b, c)];
        // Ω^{a'a} as the inverse of the normal-tangent block
        let block = DMatrix::from_fn(nn.len(), t.len(), |p, q| om.component(&[nn[p], t[q]]));
        let block_inv = block.clone().try_inverse().ok_or_else(|| Error::Numerical("Ω not Lagrangian-nondegenerate".into()))?;
        let omega_up = |a_t: usize, ap_n: usize| block_inv[(a_t, ap_n)];
        let mut two = MultiForm::zero(n, 2);
        for (ai, &a) in t.iter().enumerate() {
            if u[a] == 0.0 {
                continue;
            }
            two += &self.ambient.d_basis(a).scaled(u[a]);
            for (pi, &b) in t.iter().enumerate() {
                for &c in &t[pi + 1..] {
                    let ta = tt(a, b, c);
                    let mut hat = 0.0;
                    for &bp in nn {
                        for (api, &ap) in nn.iter().enumerate() {
                            let s = om.component(&[b, bp]) * tt(bp, c, ap) - om.component(&[c, bp]) * tt(bp, b, ap);
                            hat += s * omega_up(ai, api);
                        }
                    }
                    two.add_blade((1 << b) | (1 << c), -u[a] * (ta + hat));
                }
            }
        }
        let mut rows = form_components(&two.restrict(t));
        // δU = −div U with the Levi-Civita connection of the tangent frame
        let sub = self.ambient.restrict(t, false)?;
        let lc = FrameConnection::levi_civita(&sub);
        let mut div = 0.0;
        for (ai, &a) in t.iter().enumerate() {
            for bi in 0..t.len() {
                div += u[a] * lc.get(bi, bi, ai);
            }
        }
        let mut scalar = -div;
        for &a in t {
            let ta: f64 = t.iter().map(|&b| tt(b, a, b)).sum();
            let mut that = 0.0;
            for &ap in nn {
                for &bp in nn {
                    for &b in t {
                        that += j[(ap, a)] * tt(bp, ap, b) * j[(b, bp)];
                    }
                }
            }
            scalar += u[a] * (ta + that);
        }
        rows.push(scalar);
        Ok(rows)
    }

    /// dU + i_{Ĵ U} dΩ = 0 and δU = 0 on constant tangent one-forms U, with
    /// (Ĵ e^j)^A = J[(j, A)] (J acting on the one-form).
    pub fn nk_sas_system(&self) -> Result<DeformationSystem> {
        self.expected_kind(SystemKind::NkSas)?;
        let n = self.dim();
        let t = &self.tangent;
        let j = self.j()?;
        let dom = self.ambient.d(self.form("Omega")?);
        let sub = self.ambient.restrict(t, false)?;
        let lc = FrameConnection::levi_civita(&sub);
        let cols: Vec<Vec<f64>> = t
            .iter()
            .enumerate()
            .map(|(ti, &jj)| {
                let ju: Vec<f64> = (0..n).map(|a| j[(jj, a)]).collect();
                let lhs = &self.ambient.d_basis(jj) + &dom.interior(&ju)?;
                let mut col = form_components(&lhs.restrict(t));
                let div: f64 = (0..t.len()).map(|b| lc.get(ti, b, b)).sum();
                col.push(div);
                Ok(col)
            })
            .collect::<Result<_>>()?;
        let rows = cols[0].len();
        Ok(DeformationSystem {
            kind: SystemKind::NkSas,
            route: Route::Index,
            matrix: DMatrix::from_fn(rows, t.len(), |r, c| cols[c][r]),
            row_labels: (0..rows).map(|r| format!("c{r}")).collect(),
            col_labels: t.iter().map(|&i| format!("{}*", self.ambient.labels()[i])).collect(),
        })
    }
}

/// Field families for pointwise checks.
#[derive(Clone, Debug)]
pub enum FieldFamily {
    /// Right-invariant field generated by an adapted-frame direction.
    RightInvariant(usize),
    Constant(Vec<f64>),
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateReport {
    pub points: usize,
    pub fields: usize,
    pub max_residual: f64,
    /// Largest tangential component of a field along X (must vanish).
    pub max_tangential: f64,
}

/// Seeded group points exp(Σ x_i t_i) on the subgroup tangent to X.
pub fn sample_points(emb: &CalibratedEmbedding, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, rng::label_id(&emb.name));
    (0..count)
        .map(|_| {
            let mut x = vec![0.0; emb.dim()];
            for &i in &emb.tangent {
                x[i] = rng::normal(&mut r);
            }
            x
        })
        .collect()
}

/// Evaluates the (index-form) deformation equations for each field at each
/// point; points must lie on the subgroup generated by the tangent frame.
pub fn verify_candidate(
    emb: &CalibratedEmbedding,
    kind: SystemKind,
    fields: &[FieldFamily],
    points: &[Vec<f64>],
) -> Result<CandidateReport> {
    if !emb.ambient.is_lie() {
        return Err(Error::InvalidInput(format!("{} is not a group frame; no group points", emb.name)));
    }
    emb.ambient.restrict(&emb.tangent, true)?;
    for p in points {
        let off = emb.normal.iter().map(|&i| p[i].abs()).fold(0.0, f64::max);
        if off > 0.0 {
            return Err(Error::InvalidInput(format!("point off the submanifold (normal component {off:e})")));
        }
    }
    let per_point: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let q = GroupPoint::new(&emb.ambient, p.clone())?;
            let mut worst: (f64, f64) = (0.0, 0.0);
            for f in fields {
                let jet = match f {
                    FieldFamily::RightInvariant(dir) => {
                        let mut v = vec![0.0; emb.dim()];
                        v[*dir] = 1.0;
                        right_invariant(&emb.ambient, &q, &v)?
                    }
                    FieldFamily::Constant(v) => FieldJet::constant(v),
                };
                let tang = emb.tangent.iter().map(|&i| jet.value[i].abs()).fold(0.0, f64::max);
                let d = jet.covariant(&emb.tilde);
                let r = emb.apply_index(kind, &d)?.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                worst = (worst.0.max(r), worst.1.max(tang));
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let (max_residual, max_tangential) = per_point.iter().fold((0.0_f64, 0.0_f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(CandidateReport { points: points.len(), fields: fields.len(), max_residual, max_tangential })
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    pub samples: usize,
    pub injective: bool,
    /// Smallest ratio σ_min/|ξ| over the samples.
    pub min_singular_ratio: f64,
    /// For square symbols, max | |det| − |ξ|^m | / |ξ|^m.
    pub det_deviation: Option<f64>,
}

/// Checks injectivity of the principal symbol on seeded nonzero covectors.
pub fn symbol_ellipticity(emb: &CalibratedEmbedding, kind: SystemKind, samples: usize, seed: u64) -> Result<EllipticityReport> {
    let k = emb.tangent.len();
    let mut r = rng::stream(seed, rng::label_id(&format!("{}:{:?}", emb.name, kind)));
    let xis: Vec<Vec<f64>> = (0..samples)
        .map(|_| loop {
            let x = rng::normal_vec(&mut r, k);
            if x.iter().map(|t| t * t).sum::<f64>() > 1e-6 {
                break x;
            }
        })
        .collect();
    let res: Vec<(f64, Option<f64>)> = xis
        .par_iter()
        .map(|xi| -> Result<(f64, Option<f64>)> {
            let s = emb.symbol(kind, xi)?;
            let norm = xi.iter().map(|t| t * t).sum::<f64>().sqrt();
            let sv = s.clone().svd(false, false).singular_values;
            let min = if s.nrows() < s.ncols() { 0.0 } else { sv.min() };
            let det = if s.is_square() {
                let m = s.ncols() as i32;
                Some((s.determinant().abs() - norm.powi(m)).abs() / norm.powi(m))
            } else {
                None
            };
            Ok((min / norm, det))
        })
        .collect::<Result<_>>()?;
    let min_ratio = res.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let det_dev = res.iter().filter_map(|r| r.1).reduce(f64::max);
    Ok(EllipticityReport { samples, injective: min_ratio > 1e-8, min_singular_ratio: min_ratio, det_deviation: det_dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coframe::presets::preset;

    fn emb(p: &str, e: &str) -> CalibratedEmbedding {
        CalibratedEmbedding::from_preset(&preset(p).unwrap(), e).unwrap()
    }

    #[test]
    fn invariant_kernels_match_claims() {
        let cases = [
            ("s3xs3_almost_hermitian", "first_factor", SystemKind::Sas, 3),
            ("gxg_su2", "first_factor", SystemKind::Sas, 3),
            ("g2_group", "s3", SystemKind::Associative, 4),
            ("g2_group", "s1_s3", SystemKind::Coassociative, 3),
            ("cayley_group", "s1_s3", SystemKind::Cayley, 4),
            ("s3xs3_hermitian", "diagonal", SystemKind::Sas, 0),
        ];
        for (p, e, kind, dim) in cases {
            let em = emb(p, e);
            for route in [Route::Index, Route::Lie, Route::Cartan] {
                let k = em.system(kind, route).unwrap().kernel(1e-8);
                assert_eq!(k.dim, dim, "{p}/{e} {route:?}: {:?}", k.singular_values);
                assert!(k.conclusive, "{p}/{e} {route:?}");
            }
        }
    }

    #[test]
    fn lie_and_cartan_agree_on_invariant_fields() {
        for (p, e, kind) in [
            ("g2_group", "s3", SystemKind::Associative),
            ("g2_group", "s1_s3", SystemKind::Coassociative),
            ("cayley_group", "s1_s3", SystemKind::Cayley),
            ("s3xs3_hermitian", "diagonal", SystemKind::Sas),
            ("so5_so3", "s3_fibre", SystemKind::Associative),
        ] {
            let em = emb(p, e);
            let a = em.system(kind, Route::Lie).unwrap().matrix;
            let b = em.system(kind, Route::Cartan).unwrap().matrix;
            assert!((&a - &b).abs().max() < 1e-12, "{p}/{e}");
        }
    }

    #[test]
    fn right_invariant_family_solves_diagonal_sas() {
        let em = emb("s3xs3_hermitian", "diagonal");
        let pts = sample_points(&em, 20, 7);
        let fields: Vec<FieldFamily> = (3..6).map(FieldFamily::RightInvariant).collect();
        let r = verify_candidate(&em, SystemKind::Sas, &fields, &pts).unwrap();
        assert!(r.max_residual < 1e-10 && r.max_tangential < 1e-12, "{r:?}");
        let mut bad = pts[0].clone();
        bad[4] = 0.1;
        assert!(verify_candidate(&em, SystemKind::Sas, &fields, &[bad]).is_err());
    }

    #[test]
    fn iwasawa_candidate() {
        let em = emb("iwasawa", "alpha_plane");
        let pts = sample_points(&em, 5, 1);
        let v = vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let r = verify_candidate(&em, SystemKind::Sas, &[FieldFamily::Constant(v)], &pts).unwrap();
        assert!(r.max_residual < 1e-14);
    }

    #[test]
    fn alpha_is_anti_self_dual() {
        let em = emb("g2_group", "s1_s3");
        for k in 0..3 {
            let mut v = vec![0.0; 3];
            v[k] = 1.0;
            assert!(em.alpha_self_duality_defect(&v).unwrap() < 1e-15);
        }
    }

    #[test]
    fn symbols_are_injective() {
        for (p, e, kind) in [
            ("gxg_su2", "first_factor", SystemKind::Sas),
            ("g2_group", "s3", SystemKind::Associative),
            ("g2_group", "s1_s3", SystemKind::Coassociative),
            ("cayley_group", "s1_s3", SystemKind::Cayley),
        ] {
            let r = symbol_ellipticity(&emb(p, e), kind, 50, 3).unwrap();
            assert!(r.injective, "{p}: {r:?}");
        }
        let r = symbol_ellipticity(&emb("g2_group", "s3"), SystemKind::Associative, 50, 3).unwrap();
        assert!(r.det_deviation.unwrap() < 1e-12);
    }

    #[test]
    fn zero_symbol_has_full_kernel() {
        let em = emb("g2_group", "s3");
        let s = em.symbol(SystemKind::Associative, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(kernel_report(&s, 1e-8, 100.0).dim, 4);
    }

    #[test]
    fn u_form_kernels_agree_with_index_form() {
        for (p, e) in [
            ("s3xs3_hermitian", "diagonal"),
            ("s3xs3_almost_hermitian", "first_factor"),
            ("gxg_su2", "first_factor"),
            ("iwasawa", "alpha_plane"),
            ("spin4_b13", "so3_lagrangian"),
        ] {
            let em = emb(p, e);
            let a = em.system(SystemKind::Sas, Route::Index).unwrap().kernel(1e-8).dim;
            let b = em.system(SystemKind::Sas, Route::UForm).unwrap().kernel(1e-8).dim;
            assert_eq!(a, b, "{p}");
        }
    }

    #[test]
    fn nk_lagrangian_deformations() {
        let em = emb("spin4_b13", "so3_lagrangian");
        let s = em.system(SystemKind::NkSas, Route::Index).unwrap();
        assert!(s.matrix.abs().max() < 1e-14);
        assert_eq!(s.kernel(1e-8).dim, 3);
        // left-invariant normal fields do not preserve Ω|X; right-invariant ones do
        assert_eq!(em.system(SystemKind::Sas, Route::Lie).unwrap().kernel(1e-8).dim, 0);
        let fields: Vec<FieldFamily> = em.normal.iter().map(|&i| FieldFamily::RightInvariant(i)).collect();
        let r = verify_candidate(&em, SystemKind::Sas, &fields, &sample_points(&em, 20, 3)).unwrap();
        assert!(r.max_residual < 1e-12 && r.max_tangential < 1e-14);
    }

    #[test]
    fn homogeneous_frames_have_no_group_points() {
        let p = preset("flag_f12").unwrap();
        let em = CalibratedEmbedding::from_preset(&p, &p.embeddings[0].name).unwrap();
        assert!(verify_candidate(&em, SystemKind::Sas, &[], &[vec![0.0; 6]]).is_err());
    }

    #[test]
    fn wrong_system_rejected() {
        let em = emb("g2_group", "s3");
        assert!(em.system(SystemKind::Cayley, Route::Index).is_err());
    }
}

//! Invariant calculus on constant-structure coframes.
//!
//! A coframe algebra carries structure constants c^A_{BC} with
//! de^A = −½ c^A_{BC} e^B∧e^C, equivalently [e_B, e_C] = c^A_{BC} e_A for
//! the dual frame. Connections are stored as ω^A_{BC} with
//! ∇_{e_B} e_C = ω^A_{BC} e_A, and torsion follows
//! T(X,Y) = ∇_X Y − ∇_Y X − [X,Y].

pub mod adjoint;
pub mod algebraic;
pub mod g2;
pub mod hermitian;
pub mod presets;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{blade_indices, wedge_sign, ComplexForm, FrameMetric, MultiForm};

pub const JACOBI_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct CoframeAlgebra {
    dim: usize,
    c: Vec<f64>,
    metric: FrameMetric,
    labels: Vec<String>,
    /// False for reduced algebras of homogeneous spaces, where Jacobi need not hold.
    lie: bool,
}

fn idx(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

impl CoframeAlgebra {
    /// Lie algebra structure: antisymmetry and the Jacobi identity are checked.
    pub fn new(dim: usize, c: Vec<f64>, metric: FrameMetric, labels: Vec<String>) -> Result<Self> {
        let cf = Self::reduced(dim, c, metric, labels)?;
        let defect = cf.jacobi_defect();
        if defect > JACOBI_TOL {
            return Err(Error::Jacobi(defect));
        }
        Ok(CoframeAlgebra { lie: true, ..cf })
    }

    /// Constant coframe whose d need not square to zero on every e^A (the
    /// m-part of a reductive homogeneous space).
    pub fn reduced(dim: usize, c: Vec<f64>, metric: FrameMetric, labels: Vec<String>) -> Result<Self> {
        if c.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim * dim, found: c.len() });
        }
        if metric.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: metric.dim() });
        }
        let labels = if labels.is_empty() { (1..=dim).map(|i| format!("e{i}")).collect() } else { labels };
        if labels.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: labels.len() });
        }
        for a in 0..dim {
            for b in 0..dim {
                for cc in 0..dim {
                    let s = c[idx(dim, a, b, cc)] + c[idx(dim, a, cc, b)];
                    if s.abs() > 1e-12 {
                        return Err(Error::InvalidInput(format!(
                            "structure constants not antisymmetric at ({a},{b},{cc})"
                        )));
                    }
                }
            }
        }
        Ok(CoframeAlgebra { dim, c, metric, labels, lie: false })
    }

    pub fn from_fn(
        dim: usize,
        f: impl Fn(usize, usize, usize) -> f64,
        metric: FrameMetric,
        labels: Vec<String>,
    ) -> Result<Self> {
        let mut c = vec![0.0; dim * dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                for cc in 0..dim {
                    c[idx(dim, a, b, cc)] = f(a, b, cc);
                }
            }
        }
        Self::new(dim, c, metric, labels)
    }

    /// Abelian algebra: flat torus or flat space.
    pub fn flat(dim: usize) -> Self {
        Self::new(dim, vec![0.0; dim * dim * dim], FrameMetric::identity(dim), vec![]).expect("abelian")
    }

    /// su(2) with [e_1, e_2] = e_3 cyclic, so dσ^1 = −σ^2∧σ^3.
    pub fn su2() -> Self {
        Self::from_fn(3, |a, b, c| levi_civita_symbol(&[a, b, c]), FrameMetric::identity(3), vec![])
            .expect("su(2)")
    }

    /// Structure constants of a basis of real matrices, [X_B, X_C] = c^A_{BC} X_A.
    pub fn from_matrices(basis: &[DMatrix<f64>], metric: FrameMetric, labels: Vec<String>) -> Result<Self> {
        let cbasis: Vec<DMatrix<Complex64>> = basis.iter().map(|m| m.map(|x| Complex64::new(x, 0.0))).collect();
        Self::from_complex_matrices(&cbasis, metric, labels)
    }

    /// As `from_matrices`, for a real form of a complex matrix algebra.
    pub fn from_complex_matrices(
        basis: &[DMatrix<Complex64>],
        metric: FrameMetric,
        labels: Vec<String>,
    ) -> Result<Self> {
        let c = matrix_structure_constants(basis)?;
        Self::new(basis.len(), c, metric, labels)
    }

    pub fn direct_sum(parts: &[&CoframeAlgebra]) -> Result<Self> {
        let dim: usize = parts.iter().map(|p| p.dim).sum();
        let mut c = vec![0.0; dim * dim * dim];
        let mut g = DMatrix::zeros(dim, dim);
        let mut labels = Vec::new();
        let mut o = 0;
        for p in parts {
            for a in 0..p.dim {
                for b in 0..p.dim {
                    g[(o + a, o + b)] = p.metric.matrix()[(a, b)];
                    for cc in 0..p.dim {
                        c[idx(dim, o + a, o + b, o + cc)] = p.c(a, b, cc);
                    }
                }
            }
            labels.extend(p.labels.iter().cloned());
            o += p.dim;
        }
        let mut seen = std::collections::BTreeSet::new();
        if !labels.iter().all(|l| seen.insert(l.clone())) {
            labels = (1..=dim).map(|i| format!("e{i}")).collect();
        }
        Self::new(dim, c, FrameMetric::new(g, 1)?, labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_lie(&self) -> bool {
        self.lie
    }

    pub fn metric(&self) -> &FrameMetric {
        &self.metric
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn with_metric(&self, metric: FrameMetric) -> Result<Self> {
        if metric.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: metric.dim() });
        }
        Ok(CoframeAlgebra { metric, ..self.clone() })
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        assert_eq!(labels.len(), self.dim);
        self.labels = labels.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn c(&self, a: usize, b: usize, c: usize) -> f64 {
        self.c[idx(self.dim, a, b, c)]
    }

    pub fn structure_constants(&self) -> &[f64] {
        &self.c
    }

    /// [X, Y]^A = c^A_{BC} X^B Y^C for constant-coefficient fields.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for b in 0..n {
            if x[b] == 0.0 {
                continue;
            }
            for cc in 0..n {
                if y[cc] == 0.0 {
                    continue;
                }
                for a in 0..n {
                    out[a] += self.c(a, b, cc) * x[b] * y[cc];
                }
            }
        }
        out
    }

    /// ad(X) with ad(X)[(A,C)] = c^A_{BC} X^B.
    pub fn ad(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |a, cc| (0..n).map(|b| self.c(a, b, cc) * x[b]).sum())
    }

    /// de^A = −Σ_{B<C} c^A_{BC} e^{BC}.
    pub fn d_basis(&self, a: usize) -> MultiForm {
        let n = self.dim;
        let mut f = MultiForm::zero(n, 2);
        for b in 0..n {
            for cc in (b + 1)..n {
                let v = self.c(a, b, cc);
                if v != 0.0 {
                    f.add_blade((1 << b) | (1 << cc), -v);
                }
            }
        }
        f
    }

    /// Exterior derivative of a constant-coefficient form.
    pub fn d(&self, form: &MultiForm) -> MultiForm {
        let n = self.dim;
        assert_eq!(form.dim(), n, "form dimension");
        let de: Vec<MultiForm> = (0..n).map(|a| self.d_basis(a)).collect();
        let mut out = MultiForm::zero(n, (form.degree() + 1).min(n));
        if form.degree() == 0 || form.degree() == n {
            return out;
        }
        for (blade, coeff) in form.terms() {
            for (m, i) in blade_indices(blade).into_iter().enumerate() {
                let rest = blade & !(1 << i);
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                for (b2, c2) in de[i].terms() {
                    let s = wedge_sign(b2, rest);
                    if s != 0 {
                        out.add_blade(b2 | rest, sign * s as f64 * c2 * coeff);
                    }
                }
            }
        }
        out
    }

    pub fn d_complex(&self, form: &ComplexForm) -> ComplexForm {
        ComplexForm::new(self.d(&form.re), self.d(&form.im))
    }

    /// max_A |d(de^A)|.
    pub fn jacobi_defect(&self) -> f64 {
        if self.dim < 3 {
            return 0.0;
        }
        (0..self.dim).map(|a| self.d(&self.d_basis(a)).max_abs()).fold(0.0, f64::max)
    }

    /// New frame f_j = Σ_A q[(A,j)] e_A; structure constants, metric and
    /// labels are transported.
    pub fn change_frame(&self, q: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim;
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: q.nrows() });
        }
        let p = q.clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular frame change".into()))?;
        let c = transform_tensor(&self.c, n, &p, q);
        let g = q.transpose() * self.metric.matrix() * q;
        let g = (&g + g.transpose()) * 0.5;
        let metric = FrameMetric::new(g, self.metric.orientation * q.determinant().signum() as i8)?;
        let labels = (1..=n).map(|i| format!("f{i}")).collect();
        Ok(CoframeAlgebra { dim: n, c, metric, labels, lie: self.lie })
    }

    /// Sub-coframe on `indices`; with `require_closed`, the span must be a
    /// subalgebra (no bracket leaves it).
    pub fn restrict(&self, indices: &[usize], require_closed: bool) -> Result<Self> {
        let n = self.dim;
        let k = indices.len();
        let inside: Vec<bool> = (0..n).map(|i| indices.contains(&i)).collect();
        let mut leak: f64 = 0.0;
        for &b in indices {
            for &cc in indices {
                for a in 0..n {
                    if !inside[a] {
                        leak = leak.max(self.c(a, b, cc).abs());
                    }
                }
            }
        }
        if require_closed && leak > 1e-12 {
            return Err(Error::Precondition { what: "span closed under bracket".into(), residual: leak });
        }
        let mut c = vec![0.0; k * k * k];
        for (i, &a) in indices.iter().enumerate() {
            for (j, &b) in indices.iter().enumerate() {
                for (l, &cc) in indices.iter().enumerate() {
                    c[idx(k, i, j, l)] = self.c(a, b, cc);
                }
            }
        }
        let g = DMatrix::from_fn(k, k, |i, j| self.metric.matrix()[(indices[i], indices[j])]);
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        let cf = CoframeAlgebra { dim: k, c, metric: FrameMetric::new(g, 1)?, labels, lie: false };
        if require_closed {
            let defect = cf.jacobi_defect();
            if defect <= JACOBI_TOL {
                return Ok(CoframeAlgebra { lie: true, ..cf });
            }
        }
        Ok(cf)
    }

    /// Transposes the structure to the given index order (a permutation).
    pub fn reorder(&self, order: &[usize]) -> Result<Self> {
        let n = self.dim;
        let mut q = DMatrix::zeros(n, n);
        for (j, &i) in order.iter().enumerate() {
            q[(i, j)] = 1.0;
        }
        let mut cf = self.change_frame(&q)?;
        cf.labels = order.iter().map(|&i| self.labels[i].clone()).collect();
        cf.metric = cf.metric.clone().with_orientation(self.metric.orientation);
        Ok(cf)
    }
}

/// ε symbol for a list of distinct indices in 0..k.
pub fn levi_civita_symbol(ix: &[usize]) -> f64 {
    let mut s = 1.0;
    for i in 0..ix.len() {
        for j in (i + 1)..ix.len() {
            if ix[i] == ix[j] {
                return 0.0;
            }
            if ix[i] > ix[j] {
                s = -s;
            }
        }
    }
    s
}

/// T'^i_{jk} = p^i_A T^A_{BC} q^B_j q^C_k.
fn transform_tensor(t: &[f64], n: usize, p: &DMatrix<f64>, q: &DMatrix<f64>) -> Vec<f64> {
    // contract one index at a time
    let mut s1 = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let v = t[idx(n, a, b, c)];
                if v == 0.0 {
                    continue;
                }
                for k in 0..n {
                    s1[idx(n, a, b, k)] += v * q[(c, k)];
                }
            }
        }
    }
    let mut s2 = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for k in 0..n {
                let v = s1[idx(n, a, b, k)];
                if v == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s2[idx(n, a, j, k)] += v * q[(b, j)];
                }
            }
        }
    }
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = s2[idx(n, a, j, k)];
                if v == 0.0 {
                    continue;
                }
                for i in 0..n {
                    out[idx(n, i, j, k)] += p[(i, a)] * v;
                }
            }
        }
    }
    for x in out.iter_mut() {
        if x.abs() < 1e-15 {
            *x = 0.0;
        }
    }
    out
}

/// Solves [X_B, X_C] = c^A_{BC} X_A by least squares on the flattened matrices.
pub fn matrix_structure_constants(basis: &[DMatrix<Complex64>]) -> Result<Vec<f64>> {
    let n = basis.len();
    let first = basis.first().ok_or_else(|| Error::InvalidInput("empty basis".into()))?;
    let m = first.nrows() * first.ncols();
    // real system: stack real and imaginary parts
    let a = DMatrix::from_fn(2 * m, n, |r, c| {
        let z = basis[c].as_slice()[r % m];
        if r < m {
            z.re
        } else {
            z.im
        }
    });
    let svd = a.clone().svd(true, true);
    let mut c = vec![0.0; n * n * n];
    for b in 0..n {
        for cc in 0..n {
            let br = &basis[b] * &basis[cc] - &basis[cc] * &basis[b];
            let rhs = nalgebra::DVector::from_fn(2 * m, |r, _| {
                let z = br.as_slice()[r % m];
                if r < m {
                    z.re
                } else {
                    z.im
                }
            });
            let sol = svd.solve(&rhs, 1e-12).map_err(|e| Error::Numerical(e.to_string()))?;
            let resid = (&a * &sol - &rhs).abs().max();
            if resid > 1e-10 {
                return Err(Error::InvalidInput(format!("basis not closed under commutator (residual {resid:.2e})")));
            }
            for i in 0..n {
                let v = sol[i];
                c[idx(n, i, b, cc)] = if v.abs() < 1e-14 { 0.0 } else { v };
            }
        }
    }
    Ok(c)
}

/// Connection coefficients ω^A_{BC}: ∇_{e_B} e_C = ω^A_{BC} e_A.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameConnection {
    dim: usize,
    omega: Vec<f64>,
}

impl FrameConnection {
    pub fn zero(dim: usize) -> Self {
        FrameConnection { dim, omega: vec![0.0; dim * dim * dim] }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut omega = vec![0.0; dim * dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    omega[idx(dim, a, b, c)] = f(a, b, c);
                }
            }
        }
        FrameConnection { dim, omega }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// ω^A_{BC}.
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.omega[idx(self.dim, a, b, c)]
    }

    pub fn max_abs(&self) -> f64 {
        self.omega.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Koszul formula for a constant metric:
    /// Γ_{DBC} = ½(c_{DBC} − c_{BCD} + c_{CDB}), ω = g⁻¹Γ.
    pub fn levi_civita(cf: &CoframeAlgebra) -> Self {
        let n = cf.dim();
        let g = cf.metric().matrix();
        let ginv = cf.metric().inverse();
        let low = |d: usize, b: usize, c: usize| -> f64 { (0..n).map(|a| g[(d, a)] * cf.c(a, b, c)).sum() };
        let mut gamma = vec![0.0; n * n * n];
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    gamma[idx(n, d, b, c)] = 0.5 * (low(d, b, c) - low(b, c, d) + low(c, d, b));
                }
            }
        }
        Self::from_lowered(n, &gamma, ginv)
    }

    /// ω^A_{BC} from Γ_{DBC} = g(∇_B e_C, e_D).
    pub fn from_lowered(n: usize, gamma: &[f64], ginv: &DMatrix<f64>) -> Self {
        Self::from_fn(n, |a, b, c| (0..n).map(|d| ginv[(a, d)] * gamma[idx(n, d, b, c)]).sum())
    }

    /// Γ_{DBC} = g_{DA} ω^A_{BC}.
    pub fn lowered(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n * n];
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out[idx(n, d, b, c)] = (0..n).map(|a| g[(d, a)] * self.get(a, b, c)).sum();
                }
            }
        }
        out
    }

    /// The connection making the frame parallel (ω = 0).
    pub fn flat_left(cf: &CoframeAlgebra) -> Self {
        Self::zero(cf.dim())
    }

    /// T^A_{BC} = ω^A_{BC} − ω^A_{CB} − c^A_{BC}.
    pub fn torsion(&self, cf: &CoframeAlgebra) -> Vec<f64> {
        let n = self.dim;
        let mut t = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t[idx(n, a, b, c)] = self.get(a, b, c) - self.get(a, c, b) - cf.c(a, b, c);
                }
            }
        }
        t
    }

    /// T^A = ½ T^A_{BC} e^B∧e^C.
    pub fn torsion_forms(&self, cf: &CoframeAlgebra) -> Vec<MultiForm> {
        let n = self.dim;
        let t = self.torsion(cf);
        (0..n)
            .map(|a| {
                let mut f = MultiForm::zero(n, 2);
                for b in 0..n {
                    for c in (b + 1)..n {
                        f.add_blade((1 << b) | (1 << c), t[idx(n, a, b, c)]);
                    }
                }
                f
            })
            .collect()
    }

    /// The companion connection with torsion −T: ω̃^A_{BC} = ω^A_{CB} + c^A_{BC}.
    pub fn tilde(&self, cf: &CoframeAlgebra) -> Self {
        Self::from_fn(self.dim, |a, b, c| self.get(a, c, b) + cf.c(a, b, c))
    }

    /// ω + k with k^A_{BC} = k(a, b, c).
    pub fn corrected(&self, k: impl Fn(usize, usize, usize) -> f64) -> Self {
        Self::from_fn(self.dim, |a, b, c| self.get(a, b, c) + k(a, b, c))
    }

    /// Matrix of ∇_{e_B} on coframe elements: ∇_B e^A = M[(A,C)] e^C, M = −ω^A_{BC}.
    pub fn coframe_derivation(&self, b: usize) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |a, c| -self.get(a, b, c))
    }

    /// ∇_{e_B} a for every B.
    pub fn covariant_derivative(&self, form: &MultiForm) -> Vec<MultiForm> {
        (0..self.dim).map(|b| form.apply_derivation(&self.coframe_derivation(b))).collect()
    }

    pub fn covariant_derivative_complex(&self, form: &ComplexForm) -> Vec<ComplexForm> {
        (0..self.dim).map(|b| form.apply_derivation(&self.coframe_derivation(b))).collect()
    }

    /// max_B |∇_B a|.
    pub fn parallel_defect(&self, form: &MultiForm) -> f64 {
        self.covariant_derivative(form).iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    /// (∇_B J)^A_C = ω^A_{BD} J^D_C − J^A_D ω^D_{BC}.
    pub fn endomorphism_derivative(&self, j: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let n = self.dim;
        (0..n)
            .map(|b| {
                let w = DMatrix::from_fn(n, n, |a, c| self.get(a, b, c));
                &w * j - j * &w
            })
            .collect()
    }

    /// max |g(∇_B e_C, e_D) + g(e_C, ∇_B e_D)|.
    pub fn metric_defect(&self, g: &DMatrix<f64>) -> f64 {
        let n = self.dim;
        let low = self.lowered(g);
        let mut m: f64 = 0.0;
        for d in 0..n {
            for b in 0..n {
                for c in 0..n {
                    m = m.max((low[idx(n, d, b, c)] + low[idx(n, c, b, d)]).abs());
                }
            }
        }
        m
    }

    /// ∇̃-type derivative of a constant-coefficient field: (∇_B V)^A = ω^A_{BC} V^C.
    pub fn invariant_jet(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |a, b| (0..n).map(|c| self.get(a, b, c) * v[c]).sum())
    }

    pub fn change_frame(&self, q: &DMatrix<f64>) -> Result<Self> {
        let p = q.clone().try_inverse().ok_or_else(|| Error::InvalidInput("singular frame change".into()))?;
        Ok(FrameConnection { dim: self.dim, omega: transform_tensor(&self.omega, self.dim, &p, q) })
    }
}

/// Contracted torsion component T_{DBC} = g_{DA} T^A_{BC}.
pub fn lower_first(t: &[f64], n: usize, g: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; n * n * n];
    for d in 0..n {
        for b in 0..n {
            for c in 0..n {
                out[idx(n, d, b, c)] = (0..n).map(|a| g[(d, a)] * t[idx(n, a, b, c)]).sum();
            }
        }
    }
    out
}

/// Flat index into an n×n×n array.
pub fn tensor_index(n: usize, a: usize, b: usize, c: usize) -> usize {
    idx(n, a, b, c)
}

/// Lie derivative of a form χ parallel for the connection paired with
/// `conn_tilde`, along a field with jet ∇̃_B V^A = jet[(A,B)]:
/// L_V χ = Σ_{A,B} ∇̃_B V^A e^B ∧ i_{e_A} χ.
pub fn lie_from_jet(chi: &MultiForm, jet: &DMatrix<f64>) -> Result<MultiForm> {
    let n = chi.dim();
    if chi.degree() == 0 {
        return Err(Error::InvalidInput("Lie derivative formula needs degree ≥ 1".into()));
    }
    if jet.nrows() != n || jet.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: jet.nrows() });
    }
    let mut out = MultiForm::zero(n, chi.degree());
    for a in 0..n {
        let row: Vec<f64> = (0..n).map(|b| jet[(a, b)]).collect();
        if row.iter().all(|x| *x == 0.0) {
            continue;
        }
        let contracted = chi.interior_basis(a);
        out += &MultiForm::one_form(&row).wedge(&contracted)?;
    }
    Ok(out)
}

/// As `lie_from_jet` for an invariant (constant-coefficient) field.
pub fn lie_derivative_parallel(v: &[f64], chi: &MultiForm, conn_tilde: &FrameConnection) -> Result<MultiForm> {
    if v.len() != chi.dim() {
        return Err(Error::DimensionMismatch { expected: chi.dim(), found: v.len() });
    }
    lie_from_jet(chi, &conn_tilde.invariant_jet(v))
}

/// Cartan formula d(i_V χ) + i_V dχ for a constant-coefficient field.
pub fn lie_derivative_cartan(cf: &CoframeAlgebra, v: &[f64], chi: &MultiForm) -> Result<MultiForm> {
    let a = cf.d(&chi.interior(v)?);
    let b = if chi.degree() < chi.dim() { cf.d(chi).interior(v)? } else { MultiForm::zero(chi.dim(), chi.degree()) };
    Ok(&a + &b)
}

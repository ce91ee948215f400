//! Exterior algebra over a frame of dimension n ≤ 32.
//!
//! Basis k-forms e^{i_1} ∧ … ∧ e^{i_k} with i_1 < … < i_k are stored as bit
//! masks. Indices are 0-based throughout; `from_labels` accepts 1-based labels
//! for transcribing tables. A k-form evaluated on vectors follows the
//! determinant convention e^{12…k}(e_1,…,e_k) = 1.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Blade = u32;

pub const DEFAULT_TOL: f64 = 1e-12;

pub fn blade_indices(b: Blade) -> Vec<usize> {
    let mut out = Vec::with_capacity(b.count_ones() as usize);
    let mut m = b;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        out.push(i);
        m &= m - 1;
    }
    out
}

/// Sign of e^a ∧ e^b relative to e^{a∪b}; zero when they overlap.
pub fn wedge_sign(a: Blade, b: Blade) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    let mut m = b;
    while m != 0 {
        let j = m.trailing_zeros();
        swaps += (a >> j >> 1).count_ones();
        m &= m - 1;
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Blade of a possibly unsorted index list with its permutation sign.
pub fn blade_of(indices: &[usize]) -> Option<(Blade, i32)> {
    let mut b: Blade = 0;
    let mut sign = 1;
    for &i in indices {
        let bit = 1 << i;
        if b & bit != 0 {
            return None;
        }
        sign *= wedge_sign(b, bit);
        b |= bit;
    }
    Some((b, sign))
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All blades of degree k in dimension n, in increasing numeric order.
pub fn blades(n: usize, k: usize) -> Vec<Blade> {
    let mut out = Vec::with_capacity(binomial(n, k));
    fn rec(start: usize, n: usize, left: usize, acc: Blade, out: &mut Vec<Blade>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..=(n - left) {
            rec(i + 1, n, left - 1, acc | (1 << i), out);
        }
    }
    if k <= n {
        rec(0, n, k, 0, &mut out);
    }
    out.sort_unstable();
    out
}

/// Real exterior form with constant frame coefficients.
#[derive(Clone, PartialEq, Serialize)]
pub struct MultiForm {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Blade, f64>,
}

impl fmt::Debug for MultiForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiForm(n={}, k={}: ", self.dim, self.degree)?;
        let mut first = true;
        for (b, c) in &self.coeffs {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let idx: Vec<String> = blade_indices(*b).iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "{:+}·e[{}]", c, idx.join(","))?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl MultiForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim <= 32, "frame dimension above 32");
        assert!(degree <= dim, "degree exceeds dimension");
        MultiForm { dim, degree, coeffs: BTreeMap::new() }
    }

    pub fn scalar(dim: usize, v: f64) -> Self {
        let mut f = Self::zero(dim, 0);
        f.add_blade(0, v);
        f
    }

    /// The basis form e^{i_1}∧…∧e^{i_k} for 0-based indices in any order.
    pub fn basis(dim: usize, indices: &[usize]) -> Self {
        let mut f = Self::zero(dim, indices.len());
        assert!(indices.iter().all(|&i| i < dim), "index out of range");
        if let Some((b, s)) = blade_of(indices) {
            f.add_blade(b, s as f64);
        }
        f
    }

    /// Linear combination of basis forms with 0-based indices.
    pub fn from_terms(dim: usize, degree: usize, terms: &[(f64, &[usize])]) -> Self {
        let mut f = Self::zero(dim, degree);
        for (c, idx) in terms {
            assert_eq!(idx.len(), degree, "term degree");
            f += &Self::basis(dim, idx).scaled(*c);
        }
        f
    }

    /// Linear combination with 1-based labels, as written in index tables.
    pub fn from_labels(dim: usize, degree: usize, terms: &[(f64, &[usize])]) -> Self {
        let mut f = Self::zero(dim, degree);
        for (c, idx) in terms {
            let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
            assert_eq!(zero_based.len(), degree, "term degree");
            f += &Self::basis(dim, &zero_based).scaled(*c);
        }
        f
    }

    pub fn one_form(coeffs: &[f64]) -> Self {
        let mut f = Self::zero(coeffs.len(), 1);
        for (i, c) in coeffs.iter().enumerate() {
            f.add_blade(1 << i, *c);
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Blade, f64)> + '_ {
        self.coeffs.iter().map(|(b, c)| (*b, *c))
    }

    pub fn coeff_blade(&self, b: Blade) -> f64 {
        self.coeffs.get(&b).copied().unwrap_or(0.0)
    }

    /// Fully antisymmetric component a_{i_1…i_k} for 0-based indices in any order.
    pub fn component(&self, indices: &[usize]) -> f64 {
        match blade_of(indices) {
            Some((b, s)) => s as f64 * self.coeff_blade(b),
            None => 0.0,
        }
    }

    pub(crate) fn add_blade(&mut self, b: Blade, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.coeffs.entry(b).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.coeffs.remove(&b);
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut f = Self::zero(self.dim, self.degree);
        if s != 0.0 {
            for (b, c) in &self.coeffs {
                f.coeffs.insert(*b, c * s);
            }
        }
        f
    }

    /// Drops coefficients with |c| ≤ tol.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut f = self.clone();
        f.coeffs.retain(|_, c| c.abs() > tol);
        f
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.degree == other.degree && (self - other).max_abs() <= tol
    }

    /// Euclidean norm of the canonical coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.degree + other.degree > self.dim {
            return Ok(Self::zero(self.dim, self.dim));
        }
        let mut f = Self::zero(self.dim, self.degree + other.degree);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let s = wedge_sign(*a, *b);
                if s != 0 {
                    f.add_blade(a | b, s as f64 * ca * cb);
                }
            }
        }
        Ok(f)
    }

    /// a^k / k!.
    pub fn divided_power(&self, k: usize) -> Result<Self> {
        let mut f = Self::scalar(self.dim, 1.0);
        for j in 1..=k {
            f = f.wedge(self)?.scaled(1.0 / j as f64);
        }
        Ok(f)
    }

    /// Contraction i_v a.
    pub fn interior(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        if self.degree == 0 {
            return Err(Error::InvalidInput("interior product of a scalar".into()));
        }
        let mut f = Self::zero(self.dim, self.degree - 1);
        for (b, c) in &self.coeffs {
            for (pos, i) in blade_indices(*b).into_iter().enumerate() {
                if v[i] != 0.0 {
                    let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                    f.add_blade(b & !(1 << i), sign * v[i] * c);
                }
            }
        }
        Ok(f)
    }

    /// i_{e_i} a.
    pub fn interior_basis(&self, i: usize) -> Self {
        let mut v = vec![0.0; self.dim];
        v[i] = 1.0;
        self.interior(&v).expect("basis contraction")
    }

    /// Hodge star with respect to `m`: a ∧ *b = ⟨a, b⟩ vol.
    pub fn hodge_star(&self, m: &FrameMetric) -> Result<Self> {
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: m.dim() });
        }
        let raised = m.raise(self);
        let full: Blade = if self.dim == 32 { u32::MAX } else { (1u32 << self.dim) - 1 };
        let scale = m.orientation as f64 * m.sqrt_det();
        let mut f = Self::zero(self.dim, self.dim - self.degree);
        for (b, c) in raised.terms() {
            let comp = full & !b;
            f.add_blade(comp, scale * c * wedge_sign(b, comp) as f64);
        }
        Ok(f)
    }

    /// Pointwise inner product ⟨a, b⟩ induced by `m`.
    pub fn inner(&self, other: &Self, m: &FrameMetric) -> f64 {
        if self.degree != other.degree {
            return 0.0;
        }
        let raised = m.raise(self);
        raised.terms().map(|(b, c)| c * other.coeff_blade(b)).sum()
    }

    /// Restriction to the sub-frame spanned by `tangent` (0-based, in the
    /// order given, which fixes the orientation of the sub-frame).
    pub fn restrict(&self, tangent: &[usize]) -> Self {
        let k = tangent.len();
        if self.degree > k {
            return Self::zero(k, k);
        }
        let mut pos = vec![usize::MAX; self.dim];
        for (p, &i) in tangent.iter().enumerate() {
            pos[i] = p;
        }
        let mut f = Self::zero(k, self.degree);
        for (b, c) in &self.coeffs {
            let new: Vec<usize> = blade_indices(*b).iter().map(|&i| pos[i]).collect();
            if new.iter().any(|&p| p == usize::MAX) {
                continue;
            }
            if let Some((nb, s)) = blade_of(&new) {
                f.add_blade(nb, s as f64 * c);
            }
        }
        f
    }

    /// Pullback along the linear map whose columns are the images of the new
    /// frame vectors (rows: ambient frame).
    pub fn pullback(&self, vectors: &DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vectors.nrows() });
        }
        let m = vectors.transpose();
        self.transform(&m.transpose())
    }

    /// Substitution e^A ↦ Σ_B t[(A,B)] f^B, extended multiplicatively.
    /// The result lives on a frame of dimension t.ncols().
    pub fn transform(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.nrows() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: t.nrows() });
        }
        let n2 = t.ncols();
        if self.degree > n2 {
            return Ok(Self::zero(n2, n2));
        }
        let images: Vec<MultiForm> = (0..self.dim)
            .map(|a| {
                let row: Vec<f64> = (0..n2).map(|b| t[(a, b)]).collect();
                MultiForm::one_form(&row)
            })
            .collect();
        let mut f = Self::zero(n2, self.degree);
        for (b, c) in &self.coeffs {
            let mut acc = Self::scalar(n2, *c);
            for i in blade_indices(*b) {
                acc = acc.wedge(&images[i])?;
                if acc.is_empty() {
                    break;
                }
            }
            f += &acc;
        }
        Ok(f)
    }

    /// Derivation extending e^A ↦ Σ_C m[(A,C)] e^C by the Leibniz rule.
    pub fn apply_derivation(&self, m: &DMatrix<f64>) -> Self {
        let mut f = Self::zero(self.dim, self.degree);
        for (b, c) in &self.coeffs {
            for i in blade_indices(*b) {
                let rest = b & !(1 << i);
                // e^{..i..} = s · e^i ∧ e^{rest}
                let s = wedge_sign(1 << i, rest) as f64;
                for j in 0..self.dim {
                    let mij = m[(i, j)];
                    if mij == 0.0 {
                        continue;
                    }
                    let s2 = wedge_sign(1 << j, rest);
                    if s2 != 0 {
                        f.add_blade(rest | (1 << j), s * s2 as f64 * mij * c);
                    }
                }
            }
        }
        f
    }

    /// Evaluation on the columns of `vectors` (n × k).
    pub fn evaluate(&self, vectors: &DMatrix<f64>) -> Result<f64> {
        if vectors.nrows() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: vectors.nrows() });
        }
        if vectors.ncols() != self.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: vectors.ncols() });
        }
        let mut s = 0.0;
        for (b, c) in &self.coeffs {
            let rows = blade_indices(*b);
            let sub = DMatrix::from_fn(self.degree, self.degree, |i, j| vectors[(rows[i], j)]);
            s += c * sub.determinant();
        }
        Ok(s)
    }

    /// Dense antisymmetric coefficient tensor (row-major, n^k entries).
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let k = self.degree;
        let mut out = vec![0.0; n.pow(k as u32)];
        for (b, c) in &self.coeffs {
            let idx = blade_indices(*b);
            for_each_permutation(k, |perm, sign| {
                let mut flat = 0;
                for &p in perm {
                    flat = flat * n + idx[p];
                }
                out[flat] = sign as f64 * c;
            });
        }
        out
    }
}

/// Calls `f(permutation, sign)` for every permutation of 0..k.
pub fn for_each_permutation(k: usize, mut f: impl FnMut(&[usize], i32)) {
    let mut p: Vec<usize> = (0..k).collect();
    fn heap(n: usize, p: &mut Vec<usize>, sign: &mut i32, f: &mut dyn FnMut(&[usize], i32)) {
        if n <= 1 {
            f(p, *sign);
            return;
        }
        for i in 0..n - 1 {
            heap(n - 1, p, sign, f);
            if n % 2 == 0 {
                p.swap(i, n - 1);
            } else {
                p.swap(0, n - 1);
            }
            *sign = -*sign;
        }
        heap(n - 1, p, sign, f);
    }
    let mut sign = 1;
    heap(k, &mut p, &mut sign, &mut f);
}

impl AddAssign<&MultiForm> for MultiForm {
    fn add_assign(&mut self, rhs: &MultiForm) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        assert_eq!(self.degree, rhs.degree, "degree mismatch");
        for (b, c) in &rhs.coeffs {
            self.add_blade(*b, *c);
        }
    }
}

impl Add for &MultiForm {
    type Output = MultiForm;
    fn add(self, rhs: &MultiForm) -> MultiForm {
        let mut f = self.clone();
        f += rhs;
        f
    }
}

impl Add for MultiForm {
    type Output = MultiForm;
    fn add(self, rhs: MultiForm) -> MultiForm {
        &self + &rhs
    }
}

impl Sub for &MultiForm {
    type Output = MultiForm;
    fn sub(self, rhs: &MultiForm) -> MultiForm {
        let mut f = self.clone();
        f += &rhs.scaled(-1.0);
        f
    }
}

impl Sub for MultiForm {
    type Output = MultiForm;
    fn sub(self, rhs: MultiForm) -> MultiForm {
        &self - &rhs
    }
}

impl Neg for &MultiForm {
    type Output = MultiForm;
    fn neg(self) -> MultiForm {
        self.scaled(-1.0)
    }
}

impl Mul<&MultiForm> for f64 {
    type Output = MultiForm;
    fn mul(self, rhs: &MultiForm) -> MultiForm {
        rhs.scaled(self)
    }
}

/// Complex form stored as real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexForm {
    pub re: MultiForm,
    pub im: MultiForm,
}

impl ComplexForm {
    pub fn new(re: MultiForm, im: MultiForm) -> Self {
        assert_eq!(re.dim(), im.dim());
        assert_eq!(re.degree(), im.degree());
        ComplexForm { re, im }
    }

    pub fn from_real(re: MultiForm) -> Self {
        let im = MultiForm::zero(re.dim(), re.degree());
        ComplexForm { re, im }
    }

    pub fn scalar(dim: usize, z: Complex64) -> Self {
        ComplexForm { re: MultiForm::scalar(dim, z.re), im: MultiForm::scalar(dim, z.im) }
    }

    pub fn dim(&self) -> usize {
        self.re.dim()
    }

    pub fn degree(&self) -> usize {
        self.re.degree()
    }

    pub fn conj(&self) -> Self {
        ComplexForm { re: self.re.clone(), im: self.im.scaled(-1.0) }
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        ComplexForm {
            re: &self.re.scaled(z.re) - &self.im.scaled(z.im),
            im: &self.re.scaled(z.im) + &self.im.scaled(z.re),
        }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        let rr = self.re.wedge(&other.re)?;
        let ii = self.im.wedge(&other.im)?;
        let ri = self.re.wedge(&other.im)?;
        let ir = self.im.wedge(&other.re)?;
        Ok(ComplexForm { re: &rr - &ii, im: &ri + &ir })
    }

    pub fn interior(&self, v: &[f64]) -> Result<Self> {
        Ok(ComplexForm { re: self.re.interior(v)?, im: self.im.interior(v)? })
    }

    pub fn transform(&self, t: &DMatrix<f64>) -> Result<Self> {
        Ok(ComplexForm { re: self.re.transform(t)?, im: self.im.transform(t)? })
    }

    pub fn restrict(&self, tangent: &[usize]) -> Self {
        ComplexForm { re: self.re.restrict(tangent), im: self.im.restrict(tangent) }
    }

    pub fn apply_derivation(&self, m: &DMatrix<f64>) -> Self {
        ComplexForm { re: self.re.apply_derivation(m), im: self.im.apply_derivation(m) }
    }

    pub fn max_abs(&self) -> f64 {
        self.re.max_abs().max(self.im.max_abs())
    }
}

/// Fiber-valued form: one component per fiber direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VectorForm {
    components: Vec<MultiForm>,
}

impl VectorForm {
    pub fn new(components: Vec<MultiForm>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidInput("empty vector form".into()))?;
        for c in &components {
            if c.dim() != first.dim() {
                return Err(Error::DimensionMismatch { expected: first.dim(), found: c.dim() });
            }
            if c.degree() != first.degree() {
                return Err(Error::DegreeMismatch { expected: first.degree(), found: c.degree() });
            }
        }
        Ok(VectorForm { components })
    }

    pub fn fiber_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MultiForm] {
        &self.components
    }

    pub fn degree(&self) -> usize {
        self.components[0].degree()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn evaluate(&self, vectors: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.evaluate(vectors)).collect()
    }

    pub fn restrict(&self, tangent: &[usize]) -> Self {
        VectorForm { components: self.components.iter().map(|c| c.restrict(tangent)).collect() }
    }

    pub fn transform(&self, t: &DMatrix<f64>) -> Result<Self> {
        Ok(VectorForm {
            components: self.components.iter().map(|c| c.transform(t)).collect::<Result<_>>()?,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }
}

/// Constant frame metric g_{AB} with an orientation sign relative to the
/// frame order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameMetric {
    #[serde(serialize_with = "crate::linalg::serialize_matrix")]
    g: DMatrix<f64>,
    #[serde(skip)]
    g_inv: DMatrix<f64>,
    #[serde(skip)]
    sqrt_det: f64,
    pub orientation: i8,
}

impl FrameMetric {
    pub fn identity(n: usize) -> Self {
        FrameMetric { g: DMatrix::identity(n, n), g_inv: DMatrix::identity(n, n), sqrt_det: 1.0, orientation: 1 }
    }

    pub fn new(g: DMatrix<f64>, orientation: i8) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::InvalidInput("metric must be square".into()));
        }
        if orientation != 1 && orientation != -1 {
            return Err(Error::InvalidInput("orientation must be ±1".into()));
        }
        let asym = (&g - g.transpose()).abs().max();
        if asym > 1e-12 * (1.0 + g.abs().max()) {
            return Err(Error::InvalidInput("metric is not symmetric".into()));
        }
        let chol = g.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let g_inv = chol.inverse();
        let sqrt_det = chol.l().diagonal().iter().product::<f64>();
        Ok(FrameMetric { g, g_inv, sqrt_det, orientation })
    }

    pub fn with_orientation(mut self, orientation: i8) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.g_inv
    }

    pub fn sqrt_det(&self) -> f64 {
        self.sqrt_det
    }

    pub fn is_identity(&self) -> bool {
        (&self.g - DMatrix::<f64>::identity(self.dim(), self.dim())).abs().max() == 0.0
    }

    /// Riemannian volume form.
    pub fn volume_form(&self) -> MultiForm {
        let n = self.dim();
        let idx: Vec<usize> = (0..n).collect();
        MultiForm::basis(n, &idx).scaled(self.orientation as f64 * self.sqrt_det)
    }

    /// Components a^I with all indices raised, on canonical blades.
    fn raise(&self, a: &MultiForm) -> MultiForm {
        let n = self.dim();
        if self.is_identity() {
            return a.clone();
        }
        let k = a.degree();
        let mut f = MultiForm::zero(n, k);
        for bi in blades(n, k) {
            let rows = blade_indices(bi);
            let mut s = 0.0;
            for (bj, c) in a.terms() {
                let cols = blade_indices(bj);
                let minor = DMatrix::from_fn(k, k, |i, j| self.g_inv[(rows[i], cols[j])]);
                s += minor.determinant() * c;
            }
            f.add_blade(bi, s);
        }
        f
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += u[i] * self.g[(i, j)] * v[j];
            }
        }
        s
    }
}

//! Oriented k-planes, comass estimation and contact-set dimensions.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{blade_indices, MultiForm};
use crate::linalg::{expm, null_space, orthonormalize, sym_eigen};
use crate::rng;

/// Oriented k-plane given by an orthonormal n×k basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrientedPlane {
    #[serde(serialize_with = "crate::linalg::serialize_matrix")]
    basis: DMatrix<f64>,
}

impl OrientedPlane {
    /// Orthonormalizes the columns, keeping their orientation.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(Error::InvalidInput("plane needs 1 ≤ k ≤ n columns".into()));
        }
        let gram = basis.transpose() * &basis;
        if gram.determinant().abs() < 1e-24 {
            return Err(Error::InvalidInput("plane basis is degenerate".into()));
        }
        Ok(OrientedPlane { basis: orthonormalize(&basis) })
    }

    pub fn coordinate(n: usize, indices: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            if i >= n {
                return Err(Error::InvalidInput(format!("index {i} outside dimension {n}")));
            }
            m[(i, c)] = 1.0;
        }
        Self::new(m)
    }

    pub fn random(n: usize, k: usize, r: &mut rng::Rng) -> Self {
        loop {
            let m = DMatrix::from_fn(n, k, |_, _| rng::normal(r));
            if let Ok(p) = Self::new(m) {
                return p;
            }
        }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    /// The plane rotated by the orthogonal matrix `r`.
    pub fn rotated(&self, r: &DMatrix<f64>) -> Result<Self> {
        Self::new(r * &self.basis)
    }
}

/// Allocation-light evaluation of a fixed form on many k-frames.
#[derive(Clone, Debug)]
pub struct FormEvaluator {
    n: usize,
    k: usize,
    terms: Vec<(Vec<usize>, f64)>,
}

impl FormEvaluator {
    pub fn new(form: &MultiForm) -> Self {
        let terms = form.terms().map(|(b, c)| (blade_indices(b), c)).collect();
        FormEvaluator { n: form.dim(), k: form.degree(), terms }
    }

    /// `cols` holds the k column vectors of length n back to back.
    pub fn eval(&self, cols: &[f64]) -> f64 {
        let k = self.k;
        let n = self.n;
        let mut m = [0.0f64; 64];
        let mut s = 0.0;
        for (rows, c) in &self.terms {
            for (i, &r) in rows.iter().enumerate() {
                for j in 0..k {
                    m[i * k + j] = cols[j * n + r];
                }
            }
            s += c * small_det(&mut m[..k * k], k);
        }
        s
    }

    pub fn eval_matrix(&self, b: &DMatrix<f64>) -> f64 {
        self.eval(b.as_slice())
    }

    /// Euclidean gradient: g[(r,c)] = φ(b_1,…,e_r at slot c,…,b_k).
    pub fn gradient(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        let mut work = b.as_slice().to_vec();
        let mut g = DMatrix::zeros(n, self.k);
        for c in 0..self.k {
            let saved: Vec<f64> = work[c * n..(c + 1) * n].to_vec();
            for r in 0..n {
                work[c * n..(c + 1) * n].iter_mut().for_each(|x| *x = 0.0);
                work[c * n + r] = 1.0;
                g[(r, c)] = self.eval(&work);
            }
            work[c * n..(c + 1) * n].copy_from_slice(&saved);
        }
        g
    }
}

/// Determinant by Gaussian elimination with partial pivoting, in place.
fn small_det(m: &mut [f64], k: usize) -> f64 {
    match k {
        0 => return 1.0,
        1 => return m[0],
        2 => return m[0] * m[3] - m[1] * m[2],
        3 => {
            return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => {}
    }
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in (col + 1)..k {
            if m[r * k + col].abs() > m[piv * k + col].abs() {
                piv = r;
            }
        }
        if m[piv * k + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..k {
                m.swap(piv * k + j, col * k + j);
            }
            det = -det;
        }
        let p = m[col * k + col];
        det *= p;
        for r in (col + 1)..k {
            let f = m[r * k + col] / p;
            if f != 0.0 {
                for j in col..k {
                    m[r * k + j] -= f * m[col * k + j];
                }
            }
        }
    }
    det
}

pub fn evaluate(form: &MultiForm, plane: &OrientedPlane) -> Result<f64> {
    if form.dim() != plane.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), found: plane.dim() });
    }
    if form.degree() != plane.k() {
        return Err(Error::DegreeMismatch { expected: form.degree(), found: plane.k() });
    }
    Ok(FormEvaluator::new(form).eval_matrix(plane.basis()))
}

pub fn is_contact(form: &MultiForm, plane: &OrientedPlane, tol: f64) -> Result<bool> {
    Ok((evaluate(form, plane)? - 1.0).abs() <= tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct ComassReport {
    pub max_value: f64,
    pub argmax_plane: OrientedPlane,
    pub restarts: usize,
    pub converged_fraction: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct AscentOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions { tol: 1e-10, max_iter: 5000 }
    }
}

struct AscentResult {
    value: f64,
    basis: DMatrix<f64>,
    converged: bool,
}

/// Projected-gradient ascent with QR retraction and Armijo backtracking.
fn ascend(ev: &FormEvaluator, start: DMatrix<f64>, opts: AscentOptions) -> AscentResult {
    let n = start.nrows();
    let mut b = start;
    let mut f = ev.eval_matrix(&b);
    let mut step: f64 = 1.0;
    for _ in 0..opts.max_iter {
        let g = ev.gradient(&b);
        let proj = DMatrix::<f64>::identity(n, n) - &b * b.transpose();
        let rg = proj * g;
        let gn2 = rg.norm_squared();
        if gn2.sqrt() < opts.tol {
            return AscentResult { value: f, basis: b, converged: true };
        }
        step = (step * 2.0).min(4.0);
        loop {
            let cand = orthonormalize(&(&b + &rg * step));
            let fc = ev.eval_matrix(&cand);
            if fc >= f + 1e-4 * step * gn2 {
                b = cand;
                f = fc;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                // no ascent possible at machine precision
                return AscentResult { value: f, basis: b, converged: gn2.sqrt() < opts.tol.sqrt() };
            }
        }
    }
    let g = ev.gradient(&b);
    let proj = DMatrix::<f64>::identity(n, n) - &b * b.transpose();
    let converged = (proj * g).norm() < opts.tol;
    AscentResult { value: f, basis: b, converged }
}

/// Multi-start comass estimate; restarts run in parallel, each from its own
/// random stream, and the merge picks the best value (ties by restart index).
pub fn comass(form: &MultiForm, k: usize, restarts: usize, tol: f64, seed: u64) -> Result<ComassReport> {
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be ≥ 1".into()));
    }
    if k == 0 || k > form.dim() || k != form.degree() {
        return Err(Error::DegreeMismatch { expected: form.degree(), found: k });
    }
    let ev = FormEvaluator::new(form);
    let n = form.dim();
    let opts = AscentOptions { tol, ..AscentOptions::default() };
    let results: Vec<AscentResult> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let start = OrientedPlane::random(n, k, &mut r);
            ascend(&ev, start.basis().clone(), opts)
        })
        .collect();
    let converged = results.iter().filter(|r| r.converged).count();
    let best = results
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one restart");
    Ok(ComassReport {
        max_value: best.value,
        argmax_plane: OrientedPlane { basis: best.basis },
        restarts,
        converged_fraction: converged as f64 / restarts as f64,
        seed,
    })
}

/// Largest value of the form over `samples` random planes.
pub fn sample_max(form: &MultiForm, samples: usize, seed: u64) -> f64 {
    let ev = FormEvaluator::new(form);
    let n = form.dim();
    let k = form.degree();
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut best = f64::NEG_INFINITY;
            let mut cols = vec![0.0; n * k];
            for _ in 0..count {
                random_frame(&mut r, n, k, &mut cols);
                best = best.max(ev.eval(&cols));
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Gaussian columns orthonormalized by modified Gram–Schmidt.
fn random_frame(r: &mut rng::Rng, n: usize, k: usize, cols: &mut [f64]) {
    'retry: loop {
        for x in cols.iter_mut() {
            *x = rng::normal(r);
        }
        for j in 0..k {
            for i in 0..j {
                let dot: f64 = (0..n).map(|t| cols[i * n + t] * cols[j * n + t]).sum();
                for t in 0..n {
                    cols[j * n + t] -= dot * cols[i * n + t];
                }
            }
            let norm: f64 = (0..n).map(|t| cols[j * n + t].powi(2)).sum::<f64>().sqrt();
            if norm < 1e-8 {
                continue 'retry;
            }
            for t in 0..n {
                cols[j * n + t] /= norm;
            }
        }
        return;
    }
}

/// Hessian of ξ ↦ φ(ξ) in the normal chart W ↦ span(B + N·W) at a critical
/// plane, indexed by (normal row r, column c) with flat index r·k + c.
pub fn chart_hessian(form: &MultiForm, plane: &OrientedPlane) -> DMatrix<f64> {
    let ev = FormEvaluator::new(form);
    let b = plane.basis();
    let n = plane.dim();
    let k = plane.k();
    let normals = complement(b);
    let m = n - k;
    let f0 = ev.eval_matrix(b);
    let mut h = DMatrix::zeros(m * k, m * k);
    let mut work = b.clone();
    for c1 in 0..k {
        for c2 in 0..k {
            if c1 == c2 {
                continue;
            }
            for r1 in 0..m {
                for r2 in 0..m {
                    work.set_column(c1, &normals.column(r1));
                    work.set_column(c2, &normals.column(r2));
                    h[(r1 * k + c1, r2 * k + c2)] = ev.eval_matrix(&work);
                    work.set_column(c1, &b.column(c1));
                    work.set_column(c2, &b.column(c2));
                }
            }
        }
    }
    for i in 0..m * k {
        h[(i, i)] -= f0;
    }
    h
}

/// Orthonormal basis of the orthogonal complement of the columns of `b`.
pub fn complement(b: &DMatrix<f64>) -> DMatrix<f64> {
    null_space(&b.transpose(), 1e-10)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContactDimension {
    pub dim: usize,
    pub gap: f64,
    pub conclusive: bool,
    pub eigenvalues: Vec<f64>,
}

/// Numerical dimension of the contact set near a contact plane: the kernel
/// of the chart Hessian with threshold 1e-6·max|λ| and a required 10× gap.
pub fn contact_dimension(form: &MultiForm, seed_plane: &OrientedPlane) -> Result<ContactDimension> {
    let v = evaluate(form, seed_plane)?;
    if (v - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition { what: "seed plane is a contact plane".into(), residual: v - 1.0 });
    }
    let h = chart_hessian(form, seed_plane);
    let (vals, _) = sym_eigen(&h);
    let mut mags: Vec<f64> = vals.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max = mags.last().copied().unwrap_or(0.0);
    if max == 0.0 {
        return Ok(ContactDimension { dim: mags.len(), gap: f64::INFINITY, conclusive: true, eigenvalues: vals });
    }
    let dim = mags.iter().filter(|x| **x < 1e-6 * max).count();
    let gap = if dim == 0 || dim == mags.len() {
        f64::INFINITY
    } else if mags[dim - 1] == 0.0 {
        f64::INFINITY
    } else {
        mags[dim] / mags[dim - 1]
    };
    Ok(ContactDimension { dim, gap, conclusive: gap >= 10.0, eigenvalues: vals })
}

/// Basis of the Lie algebra of infinitesimal rotations annihilating `form`,
/// as antisymmetric n×n matrices A acting on covectors by e^C ↦ A[C][D] e^D.
pub fn stabilizer_algebra(form: &MultiForm) -> Vec<DMatrix<f64>> {
    let n = form.dim();
    let mut gens = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut a = DMatrix::zeros(n, n);
            a[(i, j)] = 1.0;
            a[(j, i)] = -1.0;
            gens.push(a);
        }
    }
    let images: Vec<MultiForm> = gens.iter().map(|a| form.apply_derivation(a)).collect();
    let mut blade_list: Vec<u32> = images.iter().flat_map(|f| f.terms().map(|(b, _)| b)).collect();
    blade_list.sort_unstable();
    blade_list.dedup();
    let m = DMatrix::from_fn(blade_list.len(), gens.len(), |r, c| images[c].coeff_blade(blade_list[r]));
    let ns = null_space(&m, 1e-10);
    (0..ns.ncols())
        .map(|c| {
            let mut a = DMatrix::zeros(n, n);
            for (g, coeff) in gens.iter().zip(ns.column(c).iter()) {
                a += g * *coeff;
            }
            a
        })
        .collect()
}

/// A random element exp(Σ t_i A_i) of the stabilizer group.
pub fn random_stabilizer_rotation(algebra: &[DMatrix<f64>], r: &mut rng::Rng) -> Option<DMatrix<f64>> {
    let first = algebra.first()?;
    let mut a = DMatrix::zeros(first.nrows(), first.ncols());
    for g in algebra {
        a += g * rng::normal(r);
    }
    Some(expm(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical;

    #[test]
    fn small_det_matches_nalgebra() {
        let mut r = rng::stream(3, 0);
        for k in 1..=6 {
            let m = DMatrix::from_fn(k, k, |_, _| rng::normal(&mut r));
            let mut buf: Vec<f64> = (0..k * k).map(|i| m[(i / k, i % k)]).collect();
            assert!((small_det(&mut buf, k) - m.determinant()).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_values() {
        let s = canonical::build_unitary(2).unwrap();
        let om = s.form("Omega").unwrap();
        let line = OrientedPlane::coordinate(4, &[0, 2]).unwrap();
        assert!((evaluate(om, &line).unwrap() - 1.0).abs() < 1e-15);
        let lag = OrientedPlane::coordinate(4, &[0, 1]).unwrap();
        assert!(evaluate(om, &lag).unwrap().abs() < 1e-15);
    }

    #[test]
    fn degree_mismatch_rejected() {
        let p = OrientedPlane::coordinate(7, &[0, 1]).unwrap();
        assert!(evaluate(&canonical::g2_form(), &p).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let psi = canonical::g2_form();
        let ev = FormEvaluator::new(&psi);
        let mut r = rng::stream(5, 0);
        let b = DMatrix::from_fn(7, 3, |_, _| rng::normal(&mut r));
        let g = ev.gradient(&b);
        let h = 1e-6;
        for row in 0..7 {
            for c in 0..3 {
                let mut bp = b.clone();
                bp[(row, c)] += h;
                let mut bm = b.clone();
                bm[(row, c)] -= h;
                let fd = (ev.eval_matrix(&bp) - ev.eval_matrix(&bm)) / (2.0 * h);
                assert!((fd - g[(row, c)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn g2_stabilizer_has_dimension_14() {
        assert_eq!(stabilizer_algebra(&canonical::g2_form()).len(), 14);
        assert_eq!(stabilizer_algebra(&canonical::spin7_form()).len(), 21);
    }
}

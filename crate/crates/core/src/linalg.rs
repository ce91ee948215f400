//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

/// Kernel measurement from a singular-value spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub dim: usize,
    pub width: usize,
    /// Ratio between the smallest kept and largest discarded singular value.
    pub gap: f64,
    pub conclusive: bool,
    pub singular_values: Vec<f64>,
}

/// Singular values below this are zero regardless of the matrix scale.
pub const KERNEL_ABS_FLOOR: f64 = 1e-12;

/// Kernel dimension of `m` (as a map from column space): singular values
/// below `rel_tol·σ_max` count as zero, and the split must show a gap of at
/// least `min_gap`. An all-zero matrix has full kernel.
pub fn kernel_report(m: &DMatrix<f64>, rel_tol: f64, min_gap: f64) -> KernelReport {
    let width = m.ncols();
    if width == 0 {
        return KernelReport { dim: 0, width, gap: f64::INFINITY, conclusive: true, singular_values: vec![] };
    }
    let mut sv: Vec<f64> = if m.nrows() == 0 {
        vec![]
    } else {
        m.clone().svd(false, false).singular_values.iter().copied().collect()
    };
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // a wide matrix has at least width − rows null directions
    while sv.len() < width {
        sv.push(0.0);
    }
    sv.truncate(width);
    let smax = sv[0];
    if smax < KERNEL_ABS_FLOOR {
        return KernelReport { dim: width, width, gap: f64::INFINITY, conclusive: true, singular_values: sv };
    }
    let rank = sv.iter().filter(|s| **s >= (rel_tol * smax).max(KERNEL_ABS_FLOOR)).count();
    let gap = if rank == width {
        f64::INFINITY
    } else {
        let small = sv[rank];
        if small == 0.0 {
            f64::INFINITY
        } else {
            sv[rank - 1] / small
        }
    };
    KernelReport { dim: width - rank, width, gap, conclusive: gap >= min_gap, singular_values: sv }
}

/// Symmetric eigen-decomposition with eigenvalues sorted ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let e = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|a, b| e.eigenvalues[*a].partial_cmp(&e.eigenvalues[*b]).unwrap());
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), order.len(), |r, c| e.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Thin QR with a positive diagonal in R, returning Q.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().column_sum().max();
    let mut s = 0u32;
    if norm > 0.5 {
        s = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a / 2f64.powi(s as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=20 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.abs().max() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Null space basis (columns) of `m` using the same threshold as `kernel_report`.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let width = m.ncols();
    // pad to square so V is complete
    let rows = m.nrows().max(width);
    let mut padded = DMatrix::<f64>::zeros(rows, width);
    padded.view_mut((0, 0), (m.nrows(), width)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let cols: Vec<usize> = (0..width)
        .filter(|&i| svd.singular_values[i] < (rel_tol * smax).max(KERNEL_ABS_FLOOR))
        .collect();
    DMatrix::from_fn(width, cols.len(), |r, c| vt[(cols[c], r)])
}

pub fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        let row: Vec<f64> = m.row(r).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// Kahan-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_has_full_kernel() {
        let r = kernel_report(&DMatrix::zeros(4, 5), 1e-8, 100.0);
        assert_eq!(r.dim, 5);
        assert!(r.conclusive);
    }

    #[test]
    fn rank_deficient_kernel() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]);
        let r = kernel_report(&m, 1e-8, 100.0);
        assert_eq!(r.dim, 1);
        assert!(r.conclusive);
        let ns = null_space(&m, 1e-8);
        assert_eq!(ns.ncols(), 1);
        assert!((&m * &ns).abs().max() < 1e-12);
    }

    #[test]
    fn wide_matrix_kernel() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        assert_eq!(kernel_report(&m, 1e-8, 100.0).dim, 2);
    }

    #[test]
    fn expm_rotation() {
        let t = 1.3_f64;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn orthonormalize_keeps_orientation() {
        let m = DMatrix::from_row_slice(3, 2, &[2.0, 1.0, 0.0, 3.0, 0.0, 0.0]);
        let q = orthonormalize(&m);
        assert!((q[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((q[(1, 1)] - 1.0).abs() < 1e-15);
    }
}

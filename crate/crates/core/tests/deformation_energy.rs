use calib_core::canonical::{build_g2, build_special_unitary, coordinate_plane};
use calib_core::coframe::presets::preset;
use calib_core::deformation::{
    sample_points, symbol_ellipticity, verify_candidate, CalibratedEmbedding, FieldFamily, Route, SystemKind,
};
use calib_core::energy::{linear_normal_family, rotation_family, ImmersedPatch};
use calib_core::linalg::{kernel_report, null_space};
use calib_core::rng;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn emb(p: &str, e: &str) -> CalibratedEmbedding {
    CalibratedEmbedding::from_preset(&preset(p).unwrap(), e).unwrap()
}

fn normal_linear(seed: u64, n: usize, cols: &[usize]) -> (DMatrix<f64>, Vec<f64>) {
    let mut r = rng::stream(seed, 0);
    let mut m = DMatrix::zeros(n, cols.len());
    let mut c = vec![0.0; n];
    for i in (0..n).filter(|i| !cols.contains(i)) {
        for a in 0..cols.len() {
            m[(i, a)] = 0.5 * rng::normal(&mut r);
        }
        c[i] = rng::normal(&mut r);
    }
    (m, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn right_invariant_fields_solve_diagonal_sas(seed in any::<u64>()) {
        let em = emb("s3xs3_hermitian", "diagonal");
        let fields: Vec<FieldFamily> = em.normal.iter().map(|&i| FieldFamily::RightInvariant(i)).collect();
        let r = verify_candidate(&em, SystemKind::Sas, &fields, &sample_points(&em, 5, seed)).unwrap();
        prop_assert!(r.max_residual < 1e-10 && r.max_tangential < 1e-12);
    }

    #[test]
    fn kernel_combinations_solve_both_encodings(seed in any::<u64>()) {
        let em = emb("g2_group", "s3");
        let index = em.system(SystemKind::Associative, Route::Index).unwrap();
        prop_assert_eq!(kernel_report(&index.matrix, 1e-8, 100.0).dim, 4);
        let basis = null_space(&index.matrix, 1e-8);
        let mut r = rng::stream(seed, 1);
        let v = &basis * nalgebra::DVector::from_vec(rng::normal_vec(&mut r, basis.ncols()));
        let lie = em.system(SystemKind::Associative, Route::Lie).unwrap();
        prop_assert!((&index.matrix * &v).amax() < 1e-10);
        prop_assert!((&lie.matrix * &v).amax() < 1e-10);
    }

    #[test]
    fn symbols_stay_injective(seed in any::<u64>()) {
        for (p, e, kind) in [("g2_group", "s1_s3", SystemKind::Coassociative), ("cayley_group", "s1_s3", SystemKind::Cayley)] {
            let r = symbol_ellipticity(&emb(p, e), kind, 20, seed).unwrap();
            prop_assert!(r.injective && r.min_singular_ratio > 1e-3);
        }
    }

    #[test]
    fn second_variation_matches_formula_on_slag_planes(seed in any::<u64>()) {
        let re = build_special_unitary(3).unwrap().form("Re_psi").unwrap().clone();
        let cols = [0, 1, 2];
        let (m, c) = normal_linear(seed, 6, &cols);
        let p = ImmersedPatch::new(3, 6, linear_normal_family(coordinate_plane(6, &cols), m, c), vec![0.0; 3], vec![1.0; 3]).unwrap().with_order(6);
        let rep = p.second_variation_check(&re, 1e-2, 1e-8).unwrap();
        prop_assert!(rep.residual < 1e-4 && rep.numeric > -1e-8, "{rep:?}");
    }
}

#[test]
fn associative_rotation_family() {
    let psi = build_g2().unwrap().form("psi").unwrap().clone();
    let mut r = rng::stream(3, 2);
    let mut a = DMatrix::zeros(7, 7);
    for i in 0..7 {
        for j in 0..i {
            let v = 0.4 * rng::normal(&mut r);
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
    let p = ImmersedPatch::new(3, 7, rotation_family(a, vec![0.0; 7], coordinate_plane(7, &[0, 1, 2])), vec![0.0; 3], vec![1.0; 3]).unwrap();
    let rep = p.second_variation_check(&psi, 1e-2, 1e-8).unwrap();
    assert!(rep.residual < 1e-4, "{rep:?}");
}

#[test]
fn cayley_candidates_need_the_canonical_frame() {
    let em = emb("cayley_group", "s1_s3");
    assert!(em.system(SystemKind::Cayley, Route::Lie).is_ok());
    assert_eq!(em.system(SystemKind::Cayley, Route::Index).unwrap().kernel(1e-8).dim, 4);
}

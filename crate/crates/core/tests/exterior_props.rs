use calib_core::canonical::{build_g2, build_spin7, g2_form, spin7_form};
use calib_core::coframe::presets::preset;
use calib_core::exterior::{blade_indices, blades};
use calib_core::grassmann::{evaluate, OrientedPlane};
use calib_core::{rng, FrameMetric, MultiForm};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn form_from(n: usize, k: usize, coeffs: &[f64]) -> MultiForm {
    let mut f = MultiForm::zero(n, k);
    for (b, c) in blades(n, k).into_iter().zip(coeffs) {
        f += &MultiForm::basis(n, &blade_indices(b)).scaled(*c);
    }
    f
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn form(n: usize, k: usize) -> impl Strategy<Value = MultiForm> {
    prop::collection::vec(-1.0f64..1.0, binom(n, k)).prop_map(move |c| form_from(n, k, &c))
}

/// (n, a, b, c) with a + b + c ≤ n and random forms of those degrees.
fn triple() -> impl Strategy<Value = (MultiForm, MultiForm, MultiForm)> {
    (3usize..=6)
        .prop_flat_map(|n| (Just(n), 0..=n / 2, 0..=n / 3))
        .prop_flat_map(|(n, a, b)| {
            let c = (n - a - b).min(2);
            (form(n, a), form(n, b), form(n, c))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wedge_is_associative((a, b, c) in triple()) {
        let l = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let r = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert!(l.approx_eq(&r, 1e-12));
    }

    #[test]
    fn wedge_is_graded_commutative((a, b, _c) in triple()) {
        let sign = if (a.degree() * b.degree()) % 2 == 0 { 1.0 } else { -1.0 };
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap().scaled(sign);
        prop_assert!(ab.approx_eq(&ba, 1e-12));
    }

    #[test]
    fn star_squared_is_sign((n, k, coeffs) in (2usize..=7).prop_flat_map(|n| (Just(n), 0..=n)).prop_flat_map(|(n, k)| (Just(n), Just(k), prop::collection::vec(-1.0f64..1.0, binom(n, k))))) {
        let f = form_from(n, k, &coeffs);
        let m = FrameMetric::identity(n);
        let twice = f.hodge_star(&m).unwrap().hodge_star(&m).unwrap();
        let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(twice.approx_eq(&f.scaled(sign), 1e-12));
    }

    #[test]
    fn interior_is_an_antiderivation((a, b, _c) in triple(), seed in any::<u64>()) {
        let n = a.dim();
        let mut r = rng::stream(seed, 0);
        let v = rng::normal_vec(&mut r, n);
        if a.degree() == 0 || b.degree() == 0 {
            return Ok(());
        }
        let lhs = a.wedge(&b).unwrap().interior(&v).unwrap();
        let sign = if a.degree() % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = &a.interior(&v).unwrap().wedge(&b).unwrap() + &a.wedge(&b.interior(&v).unwrap()).unwrap().scaled(sign);
        prop_assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn interior_twice_vanishes(f in (2usize..=6).prop_flat_map(|n| (2..=n).prop_flat_map(move |k| form(n, k))), seed in any::<u64>()) {
        let mut r = rng::stream(seed, 1);
        let v = rng::normal_vec(&mut r, f.dim());
        prop_assert!(f.interior(&v).unwrap().interior(&v).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn calibrations_bounded_on_random_planes(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 2);
        let psi = g2_form();
        let phi = spin7_form();
        let p3 = OrientedPlane::random(7, 3, &mut r);
        let p4 = OrientedPlane::random(8, 4, &mut r);
        prop_assert!(evaluate(&psi, &p3).unwrap() <= 1.0 + 1e-12);
        prop_assert!(evaluate(&phi, &p4).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn value_changes_sign_with_orientation(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 3);
        let psi = g2_form();
        let p = OrientedPlane::random(7, 3, &mut r);
        let mut flip = p.basis().clone();
        flip.column_mut(0).neg_mut();
        let q = OrientedPlane::new(flip).unwrap();
        prop_assert!((evaluate(&psi, &p).unwrap() + evaluate(&psi, &q).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn d_squared_vanishes_on_three_forms() {
    for name in ["g2_group", "cayley_group", "spin4_b13", "iwasawa"] {
        let cf = preset(name).unwrap().cf.unwrap();
        let n = cf.dim();
        for b in blades(n, 3) {
            let f = MultiForm::basis(n, &blade_indices(b));
            assert!(cf.d(&cf.d(&f)).max_abs() < 1e-12, "{name}");
        }
    }
}

#[test]
fn star_psi_is_hodge_dual_of_psi() {
    let s = build_g2().unwrap();
    let star = s.form("psi").unwrap().hodge_star(&s.metric).unwrap();
    assert!(star.approx_eq(s.form("star_psi").unwrap(), 1e-15));
    let sp = build_spin7().unwrap();
    let phi = sp.form("Phi").unwrap();
    let wedge = phi.wedge(phi).unwrap();
    // Φ∧Φ = 14 vol
    assert!(wedge.approx_eq(&sp.metric.volume_form().scaled(14.0), 1e-12));
}

#[test]
fn pullback_matches_evaluation() {
    let psi = g2_form();
    let mut r = rng::stream(9, 0);
    let m = DMatrix::from_fn(7, 3, |_, _| rng::normal(&mut r));
    let pulled = psi.pullback(&m).unwrap();
    assert!((pulled.component(&[0, 1, 2]) - psi.evaluate(&m).unwrap()).abs() < 1e-12);
}

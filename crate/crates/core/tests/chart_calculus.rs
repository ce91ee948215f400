use std::sync::Arc;

use calib_core::chart::poly::Poly;
use calib_core::chart::{
    conformally_flat_chart, kahler_chart, max_entry, poly_scalar, random_kahler_potential, sample_points, PolyChartSpec, C,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// ∂_β̄∂_α log det g from exact polynomial entries:
/// tr(g⁻¹ ∂_β̄∂_α g) − tr(g⁻¹ ∂_β̄g g⁻¹ ∂_α g).
fn exact_chern_ricci(entries: &[Vec<Poly>], z: &[C]) -> DMatrix<C> {
    let n = entries.len();
    let at = |f: &dyn Fn(&Poly) -> Poly| DMatrix::from_fn(n, n, |i, j| f(&entries[i][j]).eval(z));
    let g = at(&|p| p.clone());
    let inv = g.try_inverse().unwrap();
    DMatrix::from_fn(n, n, |b, a| {
        let dab = at(&|p| p.dz(a).dzbar(b));
        let db = at(&|p| p.dzbar(b));
        let da = at(&|p| p.dz(a));
        (&inv * dab).trace() - (&inv * db * &inv * da).trace()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chern_ricci_of_kahler_charts_matches_exact(seed in 0u64..10_000, n in 2usize..=3) {
        let k = random_kahler_potential(n, seed, "oracle");
        let (chart, entries) = kahler_chart(&k);
        for z in sample_points(n, 2, 0.6, seed, "pts") {
            let fd = chart.with_step(1e-3).chern_ricci(&z).unwrap();
            prop_assert!(max_entry(&(fd - exact_chern_ricci(&entries, &z))) < 1e-5);
        }
    }

    #[test]
    fn lee_form_of_conformally_flat_metric(seed in 0u64..10_000, n in 2usize..=4) {
        let f = Poly::random_real(n, 3, 4, 0.5, seed, "lee");
        let chart = conformally_flat_chart(f.clone()).with_step(1e-3);
        let z = sample_points(n, 1, 0.6, seed, "pt").remove(0);
        let theta = chart.lee_form(&z).unwrap();
        for a in 0..n {
            let exact = f.dz(a).eval(&z) * (n as f64 - 1.0);
            prop_assert!((theta[a] - exact).norm() < 1e-5, "{a}: {} vs {}", theta[a], exact);
        }
    }

    #[test]
    fn conformal_change_shifts_bismut_ricci(seed in 0u64..10_000, n in 2usize..=3) {
        let chart = PolyChartSpec::random(n, seed, "lemma").chart().unwrap().with_step(1e-3);
        let f = poly_scalar(Poly::random_real(n, 3, 4, 0.5, seed, "f"));
        let z = sample_points(n, 1, 0.5, seed, "pt").remove(0);
        let (r11, r20) = chart.conformal_lemma_residual(&f, &z).unwrap();
        prop_assert!(r11 < 1e-5 && r20 < 1e-5, "{r11:e} {r20:e}");
    }

    #[test]
    fn kahler_bismut_equals_chern(seed in 0u64..10_000, n in 2usize..=3) {
        let (chart, _) = kahler_chart(&random_kahler_potential(n, seed, "kb"));
        let chart = chart.with_step(1e-3);
        let z = sample_points(n, 1, 0.5, seed, "pt").remove(0);
        let b = chart.bismut_ricci(&z).unwrap();
        prop_assert!(max_entry(&(b.rho11 - chart.chern_ricci(&z).unwrap())) < 1e-5);
        prop_assert!(max_entry(&b.rho20) < 1e-5);
    }

    #[test]
    fn ricci_relation_cancels(seed in 0u64..10_000, n in 2usize..=3) {
        let chart = PolyChartSpec::random(n, seed, "rel").chart().unwrap();
        let z = sample_points(n, 1, 0.5, seed, "pt").remove(0);
        prop_assert!(chart.ricci_relation_residual(&z).unwrap() < 1e-12);
    }
}

#[test]
fn lemma_residual_converges_quadratically() {
    let chart = PolyChartSpec::random(3, 4, "conv").chart().unwrap();
    let f = poly_scalar(Poly::random_real(3, 3, 4, 0.5, 4, "f"));
    let z = sample_points(3, 1, 0.5, 4, "pt").remove(0);
    let r = |h: f64| {
        let (a, b) = chart.with_step(h).conformal_lemma_residual(&f, &z).unwrap();
        a.max(b)
    };
    let ratio = r(0.02) / r(0.01);
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn chern_flattening_of_a_conformal_flat_metric() {
    let u = Poly::random_real(3, 3, 4, 0.3, 8, "u");
    let chart = conformally_flat_chart(u.clone()).with_step(1e-4);
    let pts = sample_points(3, 3, 0.5, 8, "pts");
    let h = poly_scalar(u.scaled(C::new(-3.0, 0.0)));
    let (flat, rep) = chart.chern_flatten(h, &pts, 1e-5).unwrap();
    assert!(rep.residuals[0].1 < 1e-6);
    assert!(max_entry(&flat.chern_ricci(&pts[0]).unwrap()) < 1e-6);
    // the opposite sign does not meet the precondition
    assert!(chart.chern_flatten(poly_scalar(u.scaled(C::new(3.0, 0.0))), &pts, 1e-5).is_err());
}

#[test]
fn bismut_flattening_picks_the_exponent() {
    let u = Poly::random_real(3, 3, 4, 0.3, 6, "u");
    let chart = conformally_flat_chart(u.clone()).with_step(1e-4);
    let pts = sample_points(3, 3, 0.5, 6, "pts");
    let (_, rep) = chart.bismut_flatten(poly_scalar(u), &pts, 1e-5).unwrap();
    assert_eq!(rep.exponent, "f/(2-n)");
    let two = conformally_flat_chart(Poly::random_real(2, 3, 4, 0.3, 6, "u2"));
    assert!(two.bismut_flatten(Arc::new(|_: &[C]| 0.0), &pts, 1e-5).is_err());
}

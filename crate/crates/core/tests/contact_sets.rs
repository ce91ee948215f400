use calib_core::canonical::{build_g2, build_spin7, build_unitary, wirtinger_form};
use calib_core::grassmann::{
    contact_dimension, evaluate, is_contact, random_stabilizer_rotation, stabilizer_algebra, OrientedPlane,
};
use calib_core::rng;
use proptest::prelude::*;

fn unitary_plane(n: usize, k: usize) -> OrientedPlane {
    let idx: Vec<usize> = (0..k).flat_map(|a| [a, n + a]).collect();
    OrientedPlane::coordinate(2 * n, &idx).unwrap()
}

#[test]
fn exceptional_contact_sets() {
    let g2 = build_g2().unwrap();
    let xi = OrientedPlane::coordinate(7, &[0, 1, 2]).unwrap();
    let r = contact_dimension(g2.form("psi").unwrap(), &xi).unwrap();
    assert!(r.conclusive);
    assert_eq!(r.dim, 8);

    // coassociative reference plane is e4..e7 in this order
    let co = OrientedPlane::coordinate(7, &[3, 4, 5, 6]).unwrap();
    let star = g2.form("star_psi").unwrap();
    assert!((evaluate(star, &co).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(contact_dimension(star, &co).unwrap().dim, 8);

    let sp = build_spin7().unwrap();
    let cay = OrientedPlane::coordinate(8, &[0, 1, 2, 3]).unwrap();
    let r = contact_dimension(sp.form("Phi").unwrap(), &cay).unwrap();
    assert!(r.conclusive);
    assert_eq!(r.dim, 12);
}

#[test]
fn complex_contact_set_is_the_complex_grassmannian() {
    for (n, k) in [(2, 1), (3, 1), (4, 2), (5, 2)] {
        let u = build_unitary(n).unwrap();
        let w = wirtinger_form(u.form("Omega").unwrap(), k).unwrap();
        let r = contact_dimension(&w, &unitary_plane(n, k)).unwrap();
        assert!(r.conclusive, "{n} {k}");
        assert_eq!(r.dim, 2 * k * (n - k), "n = {n}, k = {k}");
    }
}

#[test]
fn contact_dimension_needs_a_contact_plane() {
    let g2 = build_g2().unwrap();
    let p = OrientedPlane::coordinate(7, &[0, 1, 3]).unwrap();
    assert!(contact_dimension(g2.form("psi").unwrap(), &p).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stabilizer_rotations_preserve_contact(seed in any::<u64>()) {
        let g2 = build_g2().unwrap();
        let sp = build_spin7().unwrap();
        let cases = [
            (g2.form("psi").unwrap().clone(), OrientedPlane::coordinate(7, &[0, 1, 2]).unwrap()),
            (sp.form("Phi").unwrap().clone(), OrientedPlane::coordinate(8, &[0, 1, 2, 3]).unwrap()),
        ];
        let mut r = rng::stream(seed, 0);
        for (form, xi) in cases {
            let alg = stabilizer_algebra(&form);
            let rot = random_stabilizer_rotation(&alg, &mut r).unwrap();
            let moved = xi.rotated(&rot).unwrap();
            prop_assert!(is_contact(&form, &moved, 1e-9).unwrap());
        }
    }
}

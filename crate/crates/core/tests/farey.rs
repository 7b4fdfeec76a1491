use liouville::farey::FareyLamination;
use proptest::prelude::*;

const ESTO_BOUND: f64 = 1.242_453_324_894_000_2;

#[test]
fn triangles_are_farey_and_within_radius() {
    let lam = FareyLamination::default();
    let tris = lam.enumerate_triangles(7.0);
    assert!(!tris.is_empty());
    for t in &tris {
        let [u, c, w] = t.tri.vertices();
        assert!(u.is_farey_neighbor(&c) && c.is_farey_neighbor(&w) && u.is_farey_neighbor(&w), "{}", t.tri);
        assert!(t.center_dist <= 7.0);
        assert!(t.d > 0.0);
        assert!((t.center_dist - t.d - t.u.abs()).abs() <= ESTO_BOUND, "{}", t.tri);
        let path = lam.path_to(u, c, w).unwrap();
        assert_eq!(path.len() as u32, t.depth(), "{}", t.tri);
    }
}

#[test]
fn mediant_is_the_middle_vertex() {
    let lam = FareyLamination::default();
    for t in lam.enumerate_triangles(6.0) {
        let [u, c, w] = t.tri.vertices();
        if u.is_infinite() || w.is_infinite() || c.is_infinite() {
            continue;
        }
        let (lo, hi) = (u.to_f64().min(w.to_f64()), u.to_f64().max(w.to_f64()));
        assert!(lo < c.to_f64() && c.to_f64() < hi, "{}", t.tri);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spanning_family_is_a_covering_antichain(radius in 1.2..5.5f64) {
        let lam = FareyLamination::default();
        let all = lam.enumerate_triangles(radius);
        let fam = lam.spanning_family(radius);
        prop_assert_eq!(fam.members.len() + fam.below.len(), all.len());
        for (i, a) in fam.members.iter().enumerate() {
            for b in &fam.members[i + 1..] {
                prop_assert!(!lam.separates(a, b) && !lam.separates(b, a), "{} / {}", a.tri, b.tri);
            }
        }
        for t in &fam.below {
            prop_assert!(fam.members.iter().any(|m| lam.separates(t, m)), "{} has nothing above", t.tri);
        }
    }

    #[test]
    fn enumeration_is_monotone_in_radius(r in 1.0..5.0f64, extra in 0.1..1.5f64) {
        let lam = FareyLamination::default();
        let small = lam.enumerate_triangles(r);
        let big = lam.enumerate_triangles(r + extra);
        prop_assert!(small.iter().all(|t| big.iter().any(|s| s.tri == t.tri)));
    }
}

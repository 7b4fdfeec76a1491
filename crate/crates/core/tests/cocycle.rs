use liouville::cocycle::TransverseCocycle;
use liouville::farey::FareyLamination;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn recurrence_matches_path_sums(seed in 0u64..1000, bound in 0.05..2.0f64) {
        let lam = FareyLamination::default();
        let c = TransverseCocycle::seeded_bounded(seed, bound).unwrap();
        let tris = lam.enumerate_triangles(4.5);
        let map = c.alpha_map(&lam, &tris).unwrap();
        for t in &tris {
            prop_assert_eq!(map[&t.tri.key()], c.alpha(&lam, &t.tri).unwrap());
        }
    }

    #[test]
    fn alpha_is_linear_in_the_cocycle(s1 in 0u64..1000, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let lam = FareyLamination::default();
        let x = TransverseCocycle::seeded_bounded(s1, 0.5).unwrap();
        let y = TransverseCocycle::depth_decay(1.0, 0.5).unwrap();
        let z = TransverseCocycle::linear(a, &x, b, &y);
        for t in lam.enumerate_triangles(4.0) {
            let lhs = z.alpha(&lam, &t.tri).unwrap();
            let rhs = a * x.alpha(&lam, &t.tri).unwrap() + b * y.alpha(&lam, &t.tri).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn seeded_weights_respect_the_bound(seed in 0u64..10_000, bound in 0.01..5.0f64) {
        let lam = FareyLamination::default();
        let c = TransverseCocycle::seeded_bounded(seed, bound).unwrap();
        for t in lam.enumerate_triangles(4.0) {
            // path sums of depth k stay below k times the bound
            let a = c.alpha(&lam, &t.tri).unwrap();
            prop_assert!(a.abs() <= bound * t.depth() as f64 + 1e-12);
        }
    }

    #[test]
    fn depth_decay_sums_stay_geometric(base in 0.1..2.0f64, ratio in 0.05..0.95f64) {
        let lam = FareyLamination::default();
        let c = TransverseCocycle::depth_decay(base, ratio).unwrap();
        for t in lam.enumerate_triangles(5.0) {
            let a = c.alpha(&lam, &t.tri).unwrap();
            prop_assert!(a.abs() <= base / (1.0 - ratio) + 1e-12);
        }
    }
}

#[test]
fn zero_and_scaling() {
    let lam = FareyLamination::default();
    let c = TransverseCocycle::seeded_bounded(3, 0.4).unwrap();
    let z = TransverseCocycle::zero();
    for t in lam.enumerate_triangles(4.0) {
        assert_eq!(z.alpha(&lam, &t.tri).unwrap(), 0.0);
        let a = c.alpha(&lam, &t.tri).unwrap();
        assert!((c.scaled(-2.5).alpha(&lam, &t.tri).unwrap() + 2.5 * a).abs() < 1e-12);
    }
}

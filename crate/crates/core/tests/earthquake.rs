use std::f64::consts::PI;

use liouville::cocycle::TransverseCocycle;
use liouville::earthquake::EarthquakeMap;
use liouville::farey::{FareyLamination, Fraction};

fn fr(s: &str) -> Fraction {
    s.parse().unwrap()
}

fn max_deviation(a: &EarthquakeMap, b: &EarthquakeMap, n: usize) -> f64 {
    (0..n)
        .map(|k| {
            let theta = 2.0 * PI * (k as f64 + 0.5) / n as f64;
            let d = (a.eval_theta(theta).0 - b.eval_theta(theta).0).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        })
        .fold(0.0, f64::max)
}

#[test]
fn dirac_shear_telescopes_to_elementary() {
    let lam = FareyLamination::default();
    let t = lam.triangle(fr("0"), fr("1/2"), fr("1")).unwrap();
    let c = TransverseCocycle::dirac(t.tri.g3()).scaled(0.5);
    let target = EarthquakeMap::elementary(lam.base(), t.g3, 0.5).unwrap();
    let mut prev = f64::INFINITY;
    for n in [4.0, 6.0, 8.0, 10.0] {
        let e = EarthquakeMap::truncated_shear(&lam, &c, &lam.spanning_family(n)).unwrap();
        let dev = max_deviation(&e, &target, 2000);
        eprintln!("n = {n}: {dev:e}");
        assert!(dev <= prev);
        prev = dev;
    }
    assert!(prev < 1e-4, "deviation {prev:e}");
}

#[test]
fn depth_decay_shears_converge_uniformly() {
    let lam = FareyLamination::default();
    let c = TransverseCocycle::depth_decay(1.0, 0.5).unwrap();
    let maps: Vec<EarthquakeMap> = [4.0, 6.0, 8.0, 10.0, 12.0]
        .iter()
        .map(|&n| EarthquakeMap::truncated_shear(&lam, &c, &lam.spanning_family(n)).unwrap())
        .collect();
    let diffs: Vec<f64> = maps.windows(2).map(|w| max_deviation(&w[0], &w[1], 2000)).collect();
    eprintln!("{diffs:?}");
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
}

#[test]
fn final_block_order_is_irrelevant() {
    let lam = FareyLamination::default();
    let fam = lam.spanning_family(6.0);
    let c = TransverseCocycle::seeded_bounded(11, 0.5).unwrap();
    let e = EarthquakeMap::truncated_shear(&lam, &c, &fam).unwrap();
    let mut factors = e.factors().to_vec();
    let m = fam.members.len();
    factors[..m].reverse();
    let swapped = EarthquakeMap::from_factors(lam.base(), factors).unwrap();
    assert!(max_deviation(&e, &swapped, 1000) < 1e-13);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn truncated_shears_are_monotone(seed in 0u64..500, t in -2.0..2.0f64, n in 2.0..6.0f64) {
            let lam = FareyLamination::default();
            let c = TransverseCocycle::seeded_bounded(seed, 0.5).unwrap().scaled(t);
            let e = EarthquakeMap::truncated_shear(&lam, &c, &lam.spanning_family(n)).unwrap();
            prop_assert!(e.is_monotone_on_samples(2048));
        }

        #[test]
        fn inverse_composes_to_identity(seed in 0u64..500, t in -1.5..1.5f64) {
            let lam = FareyLamination::default();
            let c = TransverseCocycle::seeded_bounded(seed, 0.5).unwrap().scaled(t);
            let e = EarthquakeMap::truncated_shear(&lam, &c, &lam.spanning_family(4.0)).unwrap();
            let id = EarthquakeMap::identity(lam.base());
            prop_assert!(max_deviation(&e.compose(&e.inverse().unwrap()).unwrap(), &id, 500) < 1e-10);
            prop_assert!(max_deviation(&e.inverse().unwrap().compose(&e).unwrap(), &id, 500) < 1e-10);
        }

        #[test]
        fn elementary_amounts_add(a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let lam = FareyLamination::default();
            let g = lam.triangle(fr("1"), fr("3/2"), fr("2")).unwrap().g3;
            let ea = EarthquakeMap::elementary(lam.base(), g, a).unwrap();
            let eb = EarthquakeMap::elementary(lam.base(), g, b).unwrap();
            let eab = EarthquakeMap::elementary(lam.base(), g, a + b).unwrap();
            prop_assert!(max_deviation(&ea.compose(&eb).unwrap(), &eab, 500) < 1e-10);
        }

        #[test]
        fn derivative_matches_difference_quotient(seed in 0u64..500, theta in 0.0..(2.0 * PI)) {
            let lam = FareyLamination::default();
            let c = TransverseCocycle::seeded_bounded(seed, 0.5).unwrap();
            let e = EarthquakeMap::truncated_shear(&lam, &c, &lam.spanning_family(3.0)).unwrap();
            let bps = e.breakpoints();
            prop_assume!(bps.iter().all(|b| {
                let d = (b - theta).rem_euclid(2.0 * PI);
                d.min(2.0 * PI - d) > 1e-3
            }));
            let h = 1e-5;
            let (lo, hi) = (e.eval_theta(theta - h).0, e.eval_theta(theta + h).0);
            let fd = (hi - lo).rem_euclid(2.0 * PI) / (2.0 * h);
            let d = e.eval_theta(theta).1;
            prop_assert!((fd - d).abs() <= 1e-5 * d.max(1.0), "{fd} vs {d}");
        }
    }
}

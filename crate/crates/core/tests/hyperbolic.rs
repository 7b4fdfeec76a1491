use std::f64::consts::PI;

use liouville::hyperbolic::{cross_ratio, liouville_density, BoundaryPoint, Chart, HPoint, MobiusMap};
use proptest::prelude::*;

fn mobius() -> impl Strategy<Value = MobiusMap> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_filter("positive determinant", |(a, b, c, d)| a * d - b * c > 0.1)
        .prop_map(|(a, b, c, d)| MobiusMap::new(a, b, c, d).unwrap())
}

fn hpoint() -> impl Strategy<Value = HPoint> {
    (-5.0..5.0f64, 0.05..5.0f64).prop_map(|(x, y)| HPoint::new(x, y).unwrap())
}

fn base() -> HPoint {
    HPoint::new(0.5, 0.75f64.sqrt()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mobius_maps_are_isometries(m in mobius(), z in hpoint(), w in hpoint()) {
        let (d0, d1) = (z.dist(&w), m.apply_point(&z).dist(&m.apply_point(&w)));
        prop_assert!((d0 - d1).abs() <= 1e-8 * (1.0 + d0), "{d0} vs {d1}");
    }

    #[test]
    fn inverse_undoes_the_map(m in mobius(), x in -20.0..20.0f64) {
        let p = BoundaryPoint::finite(x);
        let back = m.inverse().apply(&m.apply(&p)).to_real().unwrap();
        prop_assert!((back - x).abs() <= 1e-9 * (1.0 + x.abs()));
    }

    #[test]
    fn composition_acts_in_order(m in mobius(), n in mobius(), x in -20.0..20.0f64) {
        let p = BoundaryPoint::finite(x);
        let a = (m * n).apply(&p);
        let b = m.apply(&n.apply(&p));
        prop_assert!(a.bracket(&b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn cross_ratio_is_invariant(m in mobius(), xs in prop::array::uniform4(-10.0..10.0f64)) {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        prop_assume!(v.windows(2).all(|w| w[1] - w[0] > 0.05));
        let p: Vec<BoundaryPoint> = v.iter().map(|&x| BoundaryPoint::finite(x)).collect();
        let q: Vec<BoundaryPoint> = p.iter().map(|x| m.apply(x)).collect();
        let c0 = cross_ratio(&p[0], &p[1], &p[2], &p[3]).unwrap();
        let c1 = cross_ratio(&q[0], &q[1], &q[2], &q[3]).unwrap();
        prop_assert!((c0 - c1).abs() <= 1e-7 * (1.0 + c0.abs()), "{c0} vs {c1}");
    }

    #[test]
    fn chart_angles_round_trip(t in 0.0..(2.0 * PI)) {
        let chart = Chart::new(base());
        let back = chart.theta(&chart.point(t));
        let d = (back - t).rem_euclid(2.0 * PI);
        prop_assert!(d.min(2.0 * PI - d) < 1e-10);
    }

    /// The Liouville density is invariant: ρ(Mθ₁, Mθ₂) M′(θ₁) M′(θ₂) = ρ(θ₁, θ₂).
    #[test]
    fn density_is_mobius_invariant(m in mobius(), t1 in 0.0..(2.0 * PI), t2 in 0.0..(2.0 * PI)) {
        let gap = (t1 - t2).rem_euclid(2.0 * PI);
        prop_assume!(gap > 0.1 && gap < 2.0 * PI - 0.1);
        let chart = Chart::new(base());
        let conj = chart.conjugate(&m);
        let (a1, d1) = Chart::act_with_derivative(&conj, t1);
        let (a2, d2) = Chart::act_with_derivative(&conj, t2);
        let lhs = liouville_density(a1, a2) * d1 * d2;
        let rhs = liouville_density(t1, t2);
        prop_assert!((lhs - rhs).abs() <= 1e-7 * rhs, "{lhs} vs {rhs}");
    }
}

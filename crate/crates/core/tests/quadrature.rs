use approx::assert_relative_eq;
use liouville::quadrature::{fd_derivative, integrate, pairwise_sum, Breakpoints, Interval, QuadratureSpec, Rect};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairwise_sum_matches_naive_sum(v in prop::collection::vec(-1e3..1e3f64, 0..300)) {
        let naive: f64 = v.iter().sum();
        let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-12 * scale);
    }

    /// Central differences of a cubic have an `h²` error only, which one
    /// Richardson step removes exactly.
    #[test]
    fn richardson_is_exact_on_cubics(c in prop::array::uniform4(-5.0..5.0f64), t0 in -2.0..2.0f64) {
        let f = |t: f64| Ok(c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t);
        let exact = c[1] + 2.0 * c[2] * t0 + 3.0 * c[3] * t0 * t0;
        let r = fd_derivative(f, t0, &[0.1, 0.05]).unwrap();
        prop_assert!((r.value - exact).abs() <= 1e-9 * (1.0 + exact.abs()));
    }

    /// Gauss panels integrate products of low-degree polynomials exactly.
    #[test]
    fn polynomial_rectangles(a in 0.0..3.0f64, w in 0.1..3.0f64, b in 0.0..3.0f64, h in 0.1..3.0f64) {
        let rect = Rect::new(Interval::new(a, a + w), Interval::new(b, b + h));
        let spec = QuadratureSpec::default();
        let r = integrate(&[rect], &Breakpoints::default(), &spec, |x| x, |x, y| x * x * y).unwrap();
        let exact = ((a + w).powi(3) - a.powi(3)) / 3.0 * ((b + h).powi(2) - b * b) / 2.0;
        prop_assert!((r.value - exact).abs() <= 1e-11 * exact.abs().max(1.0));
    }
}

#[test]
fn integration_is_deterministic_across_runs() {
    let rect = Rect::new(Interval::new(0.3, 2.9), Interval::new(3.5, 5.8));
    let spec = QuadratureSpec::default();
    let f = |x: &f64, y: &f64| (x * y).sin() / (1.0 + x * x);
    let a = integrate(&[rect], &Breakpoints::default(), &spec, |x| x, f).unwrap();
    let b = integrate(&[rect], &Breakpoints::default(), &spec, |x| x, f).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_relative_eq!(a.value, b.value);
}

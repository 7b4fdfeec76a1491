//! Test functions on the space of oriented geodesics, Liouville integrals,
//! pullbacks under earthquake maps, and the cosine kernels.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::earthquake::EarthquakeMap;
use crate::error::{domain, Result};
use crate::farey::{FareyLamination, IdealTriangle};
use crate::hyperbolic::{
    liouville_density, min_endpoint_gap, BoundaryPoint, Chart, CircleArc, Geodesic, MobiusMap,
};
use crate::quadrature::{self, Breakpoints, Interval, IntervalSet, QuadratureReport, QuadratureSpec, Rect};

/// Minimal angular distance between a support box and the diagonal.
pub const DIAGONAL_GAP: f64 = 0.2;

/// Refinement tolerance floor for crossing-mass functions. They jump across
/// the axis geodesic, off the panel grid, so levels gain digits slowly and
/// unevenly.
pub const CROSSING_MASS_TOL: f64 = 1e-5;

/// Panel density for pullback integrals inside finite differences.
pub const FD_GRID: usize = 8;

/// `φ(θ₁, θ₂)` in chart angles of the start and end point.
type AngleFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A product of two arcs containing part of the support of a test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub first: CircleArc,
    pub second: CircleArc,
}

impl SupportBox {
    pub fn new(first: CircleArc, second: CircleArc) -> Self {
        Self { first, second }
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.second, self.first)
    }

    pub fn contains(&self, t1: f64, t2: f64) -> bool {
        self.first.contains(t1) && self.second.contains(t2)
    }

    /// Range of `θ₂ − θ₁` over the box, as an interval of real numbers.
    fn gap_range(&self) -> (f64, f64) {
        let lo = self.second.start - (self.first.start + self.first.len);
        (lo, lo + self.first.len + self.second.len)
    }

    /// Smallest `|sin((θ₂ − θ₁)/2)|` over the box; zero if it meets the
    /// diagonal.
    fn min_half_sine(&self) -> f64 {
        let (lo, hi) = self.gap_range();
        let k = (hi / (2.0 * PI)).floor();
        if 2.0 * PI * k >= lo {
            return 0.0;
        }
        (0.5 * lo).sin().abs().min((0.5 * hi).sin().abs())
    }

    fn diagonal_distance(&self) -> f64 {
        let (lo, hi) = self.gap_range();
        let k = (hi / (2.0 * PI)).floor();
        if 2.0 * PI * k >= lo {
            return 0.0;
        }
        (lo - 2.0 * PI * k).min(2.0 * PI * (k + 1.0) - hi)
    }
}

/// A compactly supported Hölder function on oriented geodesics, expressed in
/// the visual angle chart of a base point.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    chart: Chart,
    f: AngleFn,
    boxes: Vec<SupportBox>,
    graded: Vec<f64>,
    nu: f64,
    sup_bound: f64,
    seminorm_bound: f64,
    support_radius: f64,
    balanced: bool,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("nu", &self.nu)
            .field("support_radius", &self.support_radius)
            .field("holder_norm_bound", &self.holder_norm_bound())
            .field("balanced", &self.balanced)
            .finish()
    }
}

/// Hölder data and declared support of a test function.
#[derive(Clone, Debug)]
pub struct Regularity {
    pub nu: f64,
    pub sup_bound: f64,
    /// Bound on `|φ(g) − φ(h)| / d(g, h)^ν`, `d` the larger endpoint angle
    /// distance.
    pub seminorm_bound: f64,
    pub balanced: bool,
}

impl TestFunction {
    /// Validates the support boxes against the diagonal, computes the support
    /// radius, and checks by sampling that `f` vanishes on geodesics farther
    /// away than that radius.
    pub fn new(
        name: impl Into<String>,
        chart: Chart,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        boxes: Vec<SupportBox>,
        graded: Vec<f64>,
        reg: Regularity,
    ) -> Result<Self> {
        let name = name.into();
        if !(reg.nu > 0.0 && reg.nu <= 1.0) {
            return domain(format!("{name}: Hölder exponent {} outside (0, 1]", reg.nu));
        }
        let mut min_sine: f64 = 1.0;
        for b in &boxes {
            if b.diagonal_distance() < DIAGONAL_GAP {
                return domain(format!(
                    "{name}: support box within {DIAGONAL_GAP} of the diagonal"
                ));
            }
            min_sine = min_sine.min(b.min_half_sine());
        }
        let support_radius = if boxes.is_empty() { 0.0 } else { (1.0 / min_sine).acosh() };
        let out = Self {
            name,
            chart,
            f: Arc::new(f),
            boxes,
            graded: graded.into_iter().map(|t| t.rem_euclid(2.0 * PI)).collect(),
            nu: reg.nu,
            sup_bound: reg.sup_bound,
            seminorm_bound: reg.seminorm_bound,
            support_radius,
            balanced: reg.balanced,
        };
        out.check_far_geodesics(10_000)?;
        Ok(out)
    }

    fn check_far_geodesics(&self, samples: usize) -> Result<()> {
        let gap = min_endpoint_gap(self.support_radius);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..samples {
            let t1 = rng.gen_range(0.0..2.0 * PI);
            let d = rng.gen_range(-gap..gap) * 0.999;
            let v = self.eval_angles(t1, t1 + d);
            if v != 0.0 {
                return domain(format!(
                    "{}: nonzero value {v:e} on a geodesic farther than R = {} from the base point",
                    self.name, self.support_radius
                ));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn eval_angles(&self, theta1: f64, theta2: f64) -> f64 {
        let (t1, t2) = (theta1.rem_euclid(2.0 * PI), theta2.rem_euclid(2.0 * PI));
        if !self.boxes.iter().any(|b| b.contains(t1, t2)) {
            return 0.0;
        }
        (self.f)(t1, t2)
    }

    pub fn eval(&self, g: &Geodesic) -> f64 {
        self.eval_angles(self.chart.theta(&g.from), self.chart.theta(&g.to))
    }

    pub fn boxes(&self) -> &[SupportBox] {
        &self.boxes
    }

    /// Angles where the function is only Hölder; quadrature grades toward them.
    pub fn singular_angles(&self) -> &[f64] {
        &self.graded
    }

    pub fn holder_exponent(&self) -> f64 {
        self.nu
    }

    /// `sup |φ| + [φ]_ν`.
    pub fn holder_norm_bound(&self) -> f64 {
        self.sup_bound + self.seminorm_bound
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Every geodesic in the support meets the closed ball of this radius.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn is_balanced(&self) -> bool {
        self.balanced
    }

    /// `(φ + φ∘r)/2`, invariant under reversing orientation.
    pub fn symmetrized(&self) -> Result<Self> {
        let f = self.f.clone();
        let boxes0 = self.boxes.clone();
        let inside = move |a: f64, b: f64| boxes0.iter().any(|x| x.contains(a, b));
        let g = move |a: f64, b: f64| {
            let x = if inside(a, b) { f(a, b) } else { 0.0 };
            let y = if inside(b, a) { f(b, a) } else { 0.0 };
            0.5 * (x + y)
        };
        let mut boxes = self.boxes.clone();
        boxes.extend(self.boxes.iter().map(SupportBox::swapped));
        Self::new(
            format!("{}-balanced", self.name),
            self.chart,
            g,
            boxes,
            self.graded.clone(),
            Regularity {
                nu: self.nu,
                sup_bound: self.sup_bound,
                seminorm_bound: self.seminorm_bound,
                balanced: true,
            },
        )
    }

    /// `φ ∘ M⁻¹`.
    pub fn transformed(&self, m: &MobiusMap) -> Result<Self> {
        let std = self.chart.conjugate(m).renormalized();
        let inv = std.inverse();
        let image = |t: f64| Chart::act_with_derivative(&std, t).0;
        let arc_image = |a: &CircleArc| {
            if a.len >= 2.0 * PI {
                *a
            } else {
                CircleArc::ccw(image(a.start), image(a.start + a.len))
            }
        };
        let boxes = self
            .boxes
            .iter()
            .map(|b| SupportBox::new(arc_image(&b.first), arc_image(&b.second)))
            .collect();
        let graded = self.graded.iter().map(|&t| image(t)).collect();
        // angular derivatives of M⁻¹ are at most e^{d(O, M O)}
        let stretch = self.chart.base().dist(&m.apply_point(&self.chart.base())).exp();
        let this = self.clone();
        Self::new(
            format!("{}∘M⁻¹", self.name),
            self.chart,
            move |a, b| {
                this.eval_angles(
                    Chart::act_with_derivative(&inv, a).0,
                    Chart::act_with_derivative(&inv, b).0,
                )
            },
            boxes,
            graded,
            Regularity {
                nu: self.nu,
                sup_bound: self.sup_bound,
                seminorm_bound: self.seminorm_bound * stretch.powf(self.nu),
                balanced: self.balanced,
            },
        )
    }

    /// The same function on geodesics, expressed in the chart of another
    /// base point.
    pub fn in_chart(&self, chart: Chart) -> Result<Self> {
        // angle in the new chart = change(angle in the old chart)
        let change = (chart.std_map() * self.chart.std_map().inverse()).renormalized();
        let back = change.inverse();
        let image = |t: f64| Chart::act_with_derivative(&change, t).0;
        let arc_image = |a: &CircleArc| CircleArc::ccw(image(a.start), image(a.start + a.len));
        let boxes = self
            .boxes
            .iter()
            .map(|b| SupportBox::new(arc_image(&b.first), arc_image(&b.second)))
            .collect();
        let graded = self.graded.iter().map(|&t| image(t)).collect();
        let stretch = self.chart.base().dist(&chart.base()).exp();
        let this = self.clone();
        Self::new(
            self.name.clone(),
            chart,
            move |a, b| {
                this.eval_angles(
                    Chart::act_with_derivative(&back, a).0,
                    Chart::act_with_derivative(&back, b).0,
                )
            },
            boxes,
            graded,
            Regularity {
                nu: self.nu,
                sup_bound: self.sup_bound,
                seminorm_bound: self.seminorm_bound * stretch.powf(self.nu),
                balanced: self.balanced,
            },
        )
    }

    /// `a·φ + b·ψ` for test functions in the same chart.
    pub fn linear_combination(a: f64, phi: &TestFunction, b: f64, psi: &TestFunction) -> Result<Self> {
        if phi.chart.base() != psi.chart.base() {
            return domain("test functions live in different charts");
        }
        let nu = phi.nu.min(psi.nu);
        // on the circle d ≤ π, so a ν₁-Hölder bound converts to ν ≤ ν₁
        let semi = |t: &TestFunction| t.seminorm_bound * PI.powf(t.nu - nu);
        let (f, g) = (phi.clone(), psi.clone());
        let mut boxes = phi.boxes.clone();
        boxes.extend_from_slice(&psi.boxes);
        let mut graded = phi.graded.clone();
        graded.extend_from_slice(&psi.graded);
        Self::new(
            format!("{a}*{}+{b}*{}", phi.name, psi.name),
            phi.chart,
            move |x, y| a * f.eval_angles(x, y) + b * g.eval_angles(x, y),
            boxes,
            graded,
            Regularity {
                nu,
                sup_bound: a.abs() * phi.sup_bound + b.abs() * psi.sup_bound,
                seminorm_bound: a.abs() * semi(phi) + b.abs() * semi(psi),
                balanced: phi.balanced && psi.balanced,
            },
        )
    }

    /// Disjoint rectangles covering the support.
    pub fn support_rects(&self) -> Vec<Rect> {
        let boxes: Vec<Vec<Rect>> = self
            .boxes
            .iter()
            .map(|b| Rect::products(&IntervalSet::from_arc(&b.first), &IntervalSet::from_arc(&b.second)))
            .collect();
        let all: Vec<Rect> = boxes.concat();
        let overlaps = |a: &Rect, b: &Rect| {
            a.x.lo.max(b.x.lo) < a.x.hi.min(b.x.hi) && a.y.lo.max(b.y.lo) < a.y.hi.min(b.y.hi)
        };
        let disjoint = all
            .iter()
            .enumerate()
            .all(|(i, a)| all[i + 1..].iter().all(|b| !overlaps(a, b)));
        if disjoint {
            return all;
        }
        // overlay grid, keeping cells inside some rectangle
        let edges = |sel: fn(&Rect) -> Interval| {
            let mut e: Vec<f64> = all.iter().flat_map(|r| [sel(r).lo, sel(r).hi]).collect();
            e.sort_by(f64::total_cmp);
            e.dedup();
            e
        };
        let (xe, ye) = (edges(|r| r.x), edges(|r| r.y));
        let mut out = Vec::new();
        for xw in xe.windows(2) {
            let xm = 0.5 * (xw[0] + xw[1]);
            let col: Vec<&Rect> = all.iter().filter(|r| r.x.lo < xm && xm < r.x.hi).collect();
            if col.is_empty() {
                continue;
            }
            for yw in ye.windows(2) {
                let ym = 0.5 * (yw[0] + yw[1]);
                if col.iter().any(|r| r.y.lo < ym && ym < r.y.hi) {
                    out.push(Rect::new(Interval::new(xw[0], xw[1]), Interval::new(yw[0], yw[1])));
                }
            }
        }
        out
    }

    /// `max |φ(g) − φ(h)| / d(g,h)^ν` over random nearby pairs in the support,
    /// `d` the larger circular distance between corresponding endpoints.
    pub fn empirical_holder_ratio(&self, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..pairs {
            let b = self.boxes[rng.gen_range(0..self.boxes.len())];
            let t1 = b.first.start + rng.gen_range(0.0..=1.0) * b.first.len;
            let t2 = b.second.start + rng.gen_range(0.0..=1.0) * b.second.len;
            let scale = 10f64.powf(rng.gen_range(-6.0..0.0));
            let s1 = t1 + scale * rng.gen_range(-1.0..1.0);
            let s2 = t2 + scale * rng.gen_range(-1.0..1.0);
            let d = circ_dist(t1, s1).max(circ_dist(t2, s2));
            if d == 0.0 {
                continue;
            }
            let r = (self.eval_angles(t1, t2) - self.eval_angles(s1, s2)).abs() / d.powf(self.nu);
            worst = worst.max(r);
        }
        worst
    }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Signed circular offset in `(-π, π]`.
fn wrapped(t: f64) -> f64 {
    let d = (t + PI).rem_euclid(2.0 * PI) - PI;
    if d == -PI {
        PI
    } else {
        d
    }
}

/// `(1 − s²)³` on `|s| < 1`.
fn beta(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let u = 1.0 - s * s;
        u * u * u
    }
}

/// `max |β'|`, attained at `s² = 1/5`.
const BETA_LIPSCHITZ: f64 = 1.717_300_150_502_476;

/// `amp · β((θ₁ − c₁)/w₁) · β((θ₂ − c₂)/w₂)`.
pub fn bump(chart: Chart, center: (f64, f64), half_width: (f64, f64), amp: f64) -> Result<TestFunction> {
    let (c1, c2) = center;
    let (w1, w2) = half_width;
    let boxes = vec![SupportBox::new(
        CircleArc::ccw(c1 - w1, c1 + w1),
        CircleArc::ccw(c2 - w2, c2 + w2),
    )];
    TestFunction::new(
        format!("bump({c1:.3},{c2:.3})"),
        chart,
        move |a, b| amp * beta(wrapped(a - c1) / w1) * beta(wrapped(b - c2) / w2),
        boxes,
        vec![],
        Regularity {
            nu: 1.0,
            sup_bound: amp.abs(),
            seminorm_bound: amp.abs() * BETA_LIPSCHITZ * (1.0 / w1 + 1.0 / w2),
            balanced: false,
        },
    )
}

/// `φ · |θ₁ − θ₀|^ν`, genuinely ν-Hölder across `θ₁ = θ₀`.
pub fn holder_cusp(base: &TestFunction, theta0: f64, nu: f64) -> Result<TestFunction> {
    let reach = base
        .boxes
        .iter()
        .map(|b| circ_dist(theta0, b.first.start).max(circ_dist(theta0, b.first.start + b.first.len)))
        .fold(0.0, f64::max);
    let g_sup = reach.powf(nu);
    let inner = base.clone();
    let mut graded = base.graded.clone();
    graded.push(theta0);
    TestFunction::new(
        format!("{}·|θ₁−{theta0:.3}|^{nu}", base.name),
        base.chart,
        move |a, b| inner.eval_angles(a, b) * circ_dist(a, theta0).powf(nu),
        base.boxes.clone(),
        graded,
        Regularity {
            nu,
            sup_bound: base.sup_bound * g_sup,
            // |fg(x) − fg(y)| ≤ |g(x)||f(x) − f(y)| + |f(y)||g(x) − g(y)| with x
            // in the support, and d^{ν_f} ≤ π^{ν_f − ν} d^ν
            seminorm_bound: base.sup_bound + g_sup * base.seminorm_bound * PI.powf(base.nu - nu),
            balanced: false,
        },
    )
}

/// Smooth step, `0` below `-eps`, `1` above `eps`, with `h(s) + h(−s) = 1`.
fn smooth_step(s: f64, eps: f64) -> f64 {
    let x = s / eps;
    if x <= -1.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        // integral of the normalized (1 − x²)³ profile
        let p = x - x.powi(3) + 0.6 * x.powi(5) - x.powi(7) / 7.0;
        0.5 + p * 35.0 / 32.0
    }
}

/// Mollified indicator of the oriented geodesics crossing the segment from
/// `i` to `e^ℓ i`: `m(s)` with `s` the log-height of the crossing with the
/// imaginary axis. Its Liouville mass is exactly `4ℓ` for every `eps`.
pub fn crossing_mass(chart: Chart, ell: f64, eps: f64, pieces: usize) -> Result<TestFunction> {
    if !(ell > 0.0 && eps > 0.0 && pieces >= 1) {
        return domain("crossing_mass needs ell > 0, eps > 0 and at least one piece");
    }
    let (s_lo, s_hi) = (-eps, ell + eps);
    let theta = move |x: f64| chart.theta(&BoundaryPoint::finite(x));
    let (t_inf, t_zero) = (chart.theta(&BoundaryPoint::INFINITY), theta(0.0));
    // staircase cover of {x < 0 < y, s_lo ≤ ½ ln(−xy) ≤ s_hi}; pieces are
    // uniform in the angle of x along the negative half-line
    let neg = CircleArc::ccw(t_inf, t_zero);
    let x_at = |k: usize| -> f64 {
        if k == 0 {
            f64::NEG_INFINITY
        } else if k == pieces {
            0.0
        } else {
            chart
                .point(neg.start + neg.len * k as f64 / pieces as f64)
                .to_real()
                .expect("interior point is finite")
        }
    };
    let (a, b) = ((2.0 * s_lo).exp(), (2.0 * s_hi).exp());
    let mut boxes = Vec::new();
    for k in 0..pieces {
        let (x0, x1) = (x_at(k), x_at(k + 1));
        let y_lo = if x0.is_infinite() { 0.0 } else { a / -x0 };
        let y_hi = b / -x1;
        let first = CircleArc::ccw(neg.start + neg.len * k as f64 / pieces as f64, neg.start + neg.len * (k + 1) as f64 / pieces as f64);
        let second = CircleArc::ccw(
            if y_lo == 0.0 { t_zero } else { theta(y_lo) },
            if y_hi.is_infinite() { t_inf } else { theta(y_hi) },
        );
        boxes.push(SupportBox::new(first, second));
    }
    let swapped: Vec<SupportBox> = boxes.iter().map(SupportBox::swapped).collect();
    boxes.extend(swapped);
    let f = move |t1: f64, t2: f64| {
        let (x, y) = (chart.point(t1), chart.point(t2));
        let (x0, x1) = x.coords();
        let (y0, y1) = y.coords();
        // −xy projectively, sign-normalized
        let prod = -(x0 * y0) * (x1 * y1);
        if !(prod > 0.0) {
            return 0.0;
        }
        let s = 0.5 * ((-(x0 * y0)) / (x1 * y1)).ln();
        smooth_step(s, eps) - smooth_step(s - ell, eps)
    };
    TestFunction::new(
        format!("crossing-mass(ell={ell},eps={eps})"),
        chart,
        f,
        boxes,
        vec![t_inf, t_zero],
        Regularity {
            nu: 1.0,
            sup_bound: 1.0,
            // discontinuous at the imaginary axis itself
            seminorm_bound: f64::INFINITY,
            balanced: true,
        },
    )
}

/// The standard test functions for a lamination's base point: a smooth bump
/// over geodesics crossing the leaf `(0,1)`, two Hölder variants, their
/// balanced symmetrizations, and a narrow balanced bump.
pub fn builtin_test_functions(lam: &FareyLamination) -> Result<Vec<TestFunction>> {
    let chart = *lam.chart();
    let smooth = bump(chart, (3.5, 0.9), (0.3, 0.3), 1.0)?;
    let h05 = holder_cusp(&smooth, 3.6, 0.5)?;
    let h08 = holder_cusp(&smooth, 3.6, 0.8)?;
    let narrow = bump(chart, (3.7, 1.3), (0.08, 0.08), 1.0)?.symmetrized()?;
    Ok(vec![
        smooth.symmetrized()?,
        h05.symmetrized()?,
        h08.symmetrized()?,
        smooth,
        h05,
        h08,
        narrow,
    ])
}

/// Builtin test function by name: `bump`, `holder-0.5`, `holder-0.8`, each
/// optionally with a `-balanced` suffix, or `pin`.
pub fn builtin_by_name(lam: &FareyLamination, name: &str) -> Result<TestFunction> {
    let all = builtin_test_functions(lam)?;
    let idx = match name {
        "bump-balanced" => 0,
        "holder-0.5-balanced" => 1,
        "holder-0.8-balanced" => 2,
        "bump" => 3,
        "holder-0.5" => 4,
        "holder-0.8" => 5,
        "pin" => 6,
        other => return domain(format!("unknown test function `{other}`")),
    };
    Ok(all[idx].clone())
}

/// Boundary point of the standard chart at angle `θ`, as a projective pair.
#[inline]
fn std_pair(theta: f64) -> (f64, f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    (-c, s)
}

fn graded_breaks(phi: &TestFunction) -> Breakpoints {
    Breakpoints::new(vec![], phi.graded.clone())
}

/// `∬ φ dL` at a fixed quadrature level.
pub fn liouville_integral_at_level(phi: &TestFunction, grid: usize, level: usize) -> f64 {
    quadrature::integrate_at_level(
        &phi.support_rects(),
        &graded_breaks(phi),
        grid,
        level,
        |t| t,
        |a, b| phi.eval_angles(*a, *b) * liouville_density(*a, *b),
    )
    .value
}

/// `∬ φ dL` over oriented geodesics, density `½ sin⁻²((θ₁ − θ₂)/2)`.
pub fn liouville_integral(phi: &TestFunction, q: &QuadratureSpec) -> Result<QuadratureReport> {
    quadrature::integrate(
        &phi.support_rects(),
        &graded_breaks(phi),
        q,
        |t| t,
        |a, b| phi.eval_angles(*a, *b) * liouville_density(*a, *b),
    )
}

/// Source angle, image angle and angular derivative of `E`.
#[derive(Clone, Copy, Debug)]
struct Moved {
    src: f64,
    img: f64,
    deriv: f64,
}

fn pullback_breaks(phi: &TestFunction, e: &EarthquakeMap) -> Breakpoints {
    Breakpoints::new(e.breakpoints(), phi.graded.clone())
}

fn pullback_integrand(phi: &TestFunction) -> impl Fn(&Moved, &Moved) -> f64 + Sync + '_ {
    move |a, b| {
        let v = phi.eval_angles(a.src, b.src);
        if v == 0.0 {
            return 0.0;
        }
        v * liouville_density(a.img, b.img) * a.deriv * b.deriv
    }
}

fn moved(e: &EarthquakeMap) -> impl Fn(f64) -> Moved + Sync + '_ {
    move |t| {
        let (img, deriv) = e.eval_theta(t);
        Moved { src: t, img, deriv }
    }
}

/// `∬ φ∘E⁻¹ dL`, computed as `∬ φ(h) dL(E h)` over the fixed support of `φ`
/// with panels split at every kink of `E`.
pub fn pullback_integral(phi: &TestFunction, e: &EarthquakeMap, q: &QuadratureSpec) -> Result<QuadratureReport> {
    check_chart(phi, e)?;
    quadrature::integrate(&phi.support_rects(), &pullback_breaks(phi, e), q, moved(e), pullback_integrand(phi))
}

/// [`pullback_integral`] at a fixed level, for finite differences in the
/// amounts of `E` (the panel layout must not change between evaluations).
pub fn pullback_integral_at_level(phi: &TestFunction, e: &EarthquakeMap, grid: usize, level: usize) -> Result<f64> {
    check_chart(phi, e)?;
    Ok(quadrature::integrate_at_level(
        &phi.support_rects(),
        &pullback_breaks(phi, e),
        grid,
        level,
        moved(e),
        pullback_integrand(phi),
    )
    .value)
}

fn check_chart(phi: &TestFunction, e: &EarthquakeMap) -> Result<()> {
    if phi.chart.base() != e.base() {
        return domain("test function and earthquake use different base points");
    }
    Ok(())
}

/// A weighted sum of cosine kernels `Σ c_k κ(g_k, h)`, where `κ(g, h)` is the
/// cosine of the angle from `g` to `h` with `h` oriented from the far side
/// of `g` toward the base point, and `0` when `h` does not cross `g`.
#[derive(Clone, Debug)]
pub struct CosineKernel {
    terms: Vec<KernelTerm>,
    cells: Vec<CircleArc>,
}

#[derive(Clone, Debug)]
struct KernelTerm {
    coeff: f64,
    far: CircleArc,
    /// Normalizer of the (possibly moved) geodesic in standard chart
    /// coordinates.
    normalizer: MobiusMap,
    endpoints: (f64, f64),
}

impl CosineKernel {
    /// `terms` are given in source coordinates; with `deform`, cosines are
    /// taken between the images `E g` and `E h`.
    pub fn new(chart: &Chart, terms: &[(Geodesic, f64)], deform: Option<&EarthquakeMap>) -> Self {
        let std = chart.std_map();
        let terms: Vec<KernelTerm> = terms
            .iter()
            .map(|(g, c)| {
                let image = deform.map_or(*g, |e| e.apply_to_geodesic(g));
                KernelTerm {
                    coeff: *c,
                    far: CircleArc::far_side(chart.theta(&g.from), chart.theta(&g.to)),
                    normalizer: std.apply_geodesic(&image).raw_normalizer(),
                    endpoints: (chart.theta(&g.from), chart.theta(&g.to)),
                }
            })
            .collect();
        let mut cuts: Vec<f64> = terms.iter().flat_map(|t| [t.endpoints.0, t.endpoints.1]).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let cells = match cuts.len() {
            0 => vec![],
            1 => vec![CircleArc::full()],
            n => (0..n).map(|i| CircleArc::ccw(cuts[i], cuts[(i + 1) % n])).collect(),
        };
        Self { terms, cells }
    }

    fn midpoint(c: &CircleArc) -> f64 {
        c.start + 0.5 * c.len
    }

    /// Pairs of cells on which the kernel does not vanish identically.
    fn active_cells(&self) -> Vec<(CircleArc, CircleArc)> {
        let mut out = Vec::new();
        for a in &self.cells {
            for b in &self.cells {
                let (ma, mb) = (Self::midpoint(a), Self::midpoint(b));
                if self.terms.iter().any(|t| t.far.contains(ma) != t.far.contains(mb)) {
                    out.push((*a, *b));
                }
            }
        }
        out
    }

    /// Kernel at source angles `s` with image-chart pairs `(x, y)`.
    #[inline]
    fn value(&self, s1: f64, s2: f64, x: (f64, f64), y: (f64, f64)) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let (in1, in2) = (t.far.contains(s1), t.far.contains(s2));
            if in1 == in2 {
                continue;
            }
            let u = t.normalizer.act(x.0, x.1);
            let v = t.normalizer.act(y.0, y.1);
            let cos = -(u.0 * v.1 + v.0 * u.1) / (u.0 * v.1 - v.0 * u.1);
            acc += if in1 { t.coeff * cos } else { -t.coeff * cos };
        }
        acc
    }

    pub fn eval(&self, theta1: f64, theta2: f64) -> f64 {
        self.value(theta1, theta2, std_pair(theta1), std_pair(theta2))
    }
}

/// Regions of the support on which the kernel is active, split along the
/// kernel's cells.
fn kernel_rects(phi: &TestFunction, k: &CosineKernel) -> Vec<Rect> {
    let support = phi.support_rects();
    let mut out = Vec::new();
    for (a, b) in k.active_cells() {
        let (ia, ib) = (IntervalSet::from_arc(&a), IntervalSet::from_arc(&b));
        for r in &support {
            let x = IntervalSet::from_interval(r.x).intersect(&ia);
            let y = IntervalSet::from_interval(r.y).intersect(&ib);
            out.extend(Rect::products(&x, &y));
        }
    }
    out
}

/// Endpoint angles of kernel geodesics that are themselves in the support:
/// there the kernel has a direction-dependent limit, so quadrature grades
/// toward them.
fn kernel_breaks(phi: &TestFunction, k: &CosineKernel, extra: &Breakpoints) -> Breakpoints {
    let mut graded = phi.graded.clone();
    let mut kinks = Vec::new();
    for t in &k.terms {
        let (a, b) = t.endpoints;
        kinks.extend([a, b]);
        let near = |x: f64, y: f64| {
            phi.boxes.iter().any(|bx| {
                let grow = |c: &CircleArc| CircleArc {
                    start: (c.start - 1e-9).rem_euclid(2.0 * PI),
                    len: c.len + 2e-9,
                };
                grow(&bx.first).contains(x) && grow(&bx.second).contains(y)
            })
        };
        if near(a, b) || near(b, a) {
            graded.extend([a, b]);
        }
    }
    Breakpoints::new(kinks, graded).merged(extra)
}

/// `∬ φ(h) K(h) dL(h)` for a cosine kernel, optionally deformed by `E`
/// (then `∬ φ(h) K_E(h) dL(E h)`).
pub fn kernel_integral(
    phi: &TestFunction,
    k: &CosineKernel,
    deform: Option<&EarthquakeMap>,
    q: &QuadratureSpec,
) -> Result<QuadratureReport> {
    let rects = kernel_rects(phi, k);
    if rects.is_empty() {
        return Ok(QuadratureReport {
            value: 0.0,
            estimates: vec![],
            level: 0,
            tolerance: q.refinement_tol,
            error_estimate: 0.0,
        });
    }
    let extra = deform.map_or_else(Breakpoints::default, |e| Breakpoints::new(e.breakpoints(), vec![]));
    let breaks = kernel_breaks(phi, k, &extra);
    match deform {
        None => quadrature::integrate(
            &rects,
            &breaks,
            q,
            |t| (t, std_pair(t)),
            |a, b| {
                let v = phi.eval_angles(a.0, b.0);
                if v == 0.0 {
                    return 0.0;
                }
                v * liouville_density(a.0, b.0) * k.value(a.0, b.0, a.1, b.1)
            },
        ),
        Some(e) => {
            check_chart(phi, e)?;
            quadrature::integrate(
                &rects,
                &breaks,
                q,
                |t| {
                    let m = moved(e)(t);
                    (m, std_pair(m.img))
                },
                |a, b| {
                    let v = phi.eval_angles(a.0.src, b.0.src);
                    if v == 0.0 {
                        return 0.0;
                    }
                    v * liouville_density(a.0.img, b.0.img)
                        * a.0.deriv
                        * b.0.deriv
                        * k.value(a.0.src, b.0.src, a.1, b.1)
                },
            )
        }
    }
}

/// `C₀(φ, g) = ∬ φ(h) cos θ(g, h) dL(h)`, the derivative at `a = 0` of the
/// pullback under `E_g^a`.
pub fn kernel_geodesic(phi: &TestFunction, g: &Geodesic, q: &QuadratureSpec) -> Result<QuadratureReport> {
    let k = CosineKernel::new(phi.chart(), &[(*g, 1.0)], None);
    kernel_integral(phi, &k, None, q)
}

/// `C₀(φ, T)` with the combined kernel `κ(g₃) − κ(g₁) − κ(g₂)`.
pub fn kernel_triangle(phi: &TestFunction, t: &IdealTriangle, q: &QuadratureSpec) -> Result<QuadratureReport> {
    let k = triangle_kernel(phi.chart(), t, None);
    kernel_integral(phi, &k, None, q)
}

pub fn triangle_kernel(chart: &Chart, t: &IdealTriangle, deform: Option<&EarthquakeMap>) -> CosineKernel {
    CosineKernel::new(chart, &[(t.g3, 1.0), (t.g1, -1.0), (t.g2, -1.0)], deform)
}

/// Whether some geodesic in the support of `φ` crosses `g`.
pub fn support_crosses(phi: &TestFunction, g: &Geodesic) -> bool {
    let chart = phi.chart();
    let far = IntervalSet::from_arc(&CircleArc::far_side(chart.theta(&g.from), chart.theta(&g.to)));
    let full = IntervalSet::from_arc(&CircleArc::full());
    let near = full.subtract(&far);
    phi.boxes().iter().any(|b| {
        let (a1, a2) = (IntervalSet::from_arc(&b.first), IntervalSet::from_arc(&b.second));
        (!a1.intersect(&far).is_empty() && !a2.intersect(&near).is_empty())
            || (!a1.intersect(&near).is_empty() && !a2.intersect(&far).is_empty())
    })
}

/// Triangles with a side crossed by the support of `φ`; the others have
/// `C₀(φ, T) = 0`.
pub fn triangles_meeting_support(phi: &TestFunction, tris: &[IdealTriangle]) -> Vec<IdealTriangle> {
    tris.iter()
        .filter(|t| [t.g1, t.g2, t.g3].iter().any(|g| support_crosses(phi, g)))
        .copied()
        .collect()
}

/// A kernel next to the finite-difference derivative it is defined by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub label: String,
    pub kernel: f64,
    pub fd_value: f64,
    pub fd_error: f64,
    pub fd_level: usize,
    pub fd_warning: Option<String>,
    /// `|kernel − fd| / max(|fd|, 1e-12)`.
    pub agreement: f64,
}

fn kernel_check(label: String, kernel: f64, fd: quadrature::FdReport, level: usize) -> KernelCheck {
    KernelCheck {
        label,
        kernel,
        agreement: (kernel - fd.value).abs() / fd.value.abs().max(1e-12),
        fd_value: fd.value,
        fd_error: fd.error_estimate,
        fd_level: level,
        fd_warning: fd.warning,
    }
}

/// `C₀(φ, g)` against finite differences of `a ↦ ∬ φ ∘ (E_g^a)⁻¹ dL`.
pub fn check_kernel_geodesic(phi: &TestFunction, g: &Geodesic, q: &QuadratureSpec, steps: &[f64]) -> Result<KernelCheck> {
    let k = kernel_geodesic(phi, g, q)?.value;
    let base = phi.chart().base();
    let (fd, level) = quadrature::fd_derivative_refined(
        |level, a| pullback_integral_at_level(phi, &EarthquakeMap::elementary(base, *g, a)?, FD_GRID, level),
        0.0,
        steps,
        q.max_levels,
    )?;
    Ok(kernel_check(format!("{} → {}", g.from, g.to), k, fd, level))
}

/// `C₀(φ, T)` against finite differences of `a ↦ ∬ φ ∘ (E_T^a)⁻¹ dL`.
pub fn check_kernel_triangle(
    lam: &FareyLamination,
    phi: &TestFunction,
    t: &IdealTriangle,
    q: &QuadratureSpec,
    steps: &[f64],
) -> Result<KernelCheck> {
    let k = kernel_triangle(phi, t, q)?.value;
    let (fd, level) = quadrature::fd_derivative_refined(
        |level, a| pullback_integral_at_level(phi, &EarthquakeMap::triangle_factor(lam, t, a)?, FD_GRID, level),
        0.0,
        steps,
        q.max_levels,
    )?;
    Ok(kernel_check(t.tri.to_string(), k, fd, level))
}

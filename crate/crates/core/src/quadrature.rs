//! Tensor Gauss–Legendre quadrature on unions of rectangles in angle
//! coordinates, with panels split at kinks and graded toward declared
//! singular points; plus a Richardson finite-difference derivative.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::CircleArc;

const GAUSS_ORDER: usize = 8;
/// Number of geometrically shrinking panels on each side of a graded point.
const GRADING_DEPTH: i32 = 26;

fn gauss_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let order = NonZeroUsize::new(GAUSS_ORDER).expect("nonzero order");
        GaussLegendre::new(order).as_node_weight_pairs().to_vec()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Panels per full circle at level 0.
    pub base_grid: usize,
    /// Relative Cauchy tolerance between successive levels.
    pub refinement_tol: f64,
    pub max_levels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            base_grid: 8,
            refinement_tol: 1e-9,
            max_levels: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_grid < 8 {
            return Err(Error::Config {
                field: "quadrature.base_grid".into(),
                message: format!("must be at least 8, got {}", self.base_grid),
            });
        }
        if !(self.refinement_tol > 0.0) {
            return Err(Error::Config {
                field: "quadrature.refinement_tol".into(),
                message: format!("must be positive, got {}", self.refinement_tol),
            });
        }
        if self.max_levels == 0 {
            return Err(Error::Config {
                field: "quadrature.max_levels".into(),
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// A closed interval of angles, `lo ≤ hi`, inside `[0, 2π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// A finite union of disjoint intervals in `[0, 2π]`, sorted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet(pub Vec<Interval>);

impl IntervalSet {
    pub fn from_interval(iv: Interval) -> Self {
        Self(if iv.is_empty() { vec![] } else { vec![iv] })
    }

    /// An arc of the circle cut at angle 0.
    pub fn from_arc(arc: &CircleArc) -> Self {
        let end = arc.start + arc.len;
        if end <= 2.0 * PI {
            Self::from_interval(Interval::new(arc.start, end))
        } else {
            let mut out = vec![Interval::new(0.0, end - 2.0 * PI)];
            out.push(Interval::new(arc.start, 2.0 * PI));
            Self(out.into_iter().filter(|i| !i.is_empty()).collect())
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.0 {
            for b in &other.0 {
                let iv = Interval::new(a.lo.max(b.lo), a.hi.min(b.hi));
                if !iv.is_empty() {
                    out.push(iv);
                }
            }
        }
        out.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        IntervalSet(out)
    }

    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let mut cur = self.0.clone();
        for b in &other.0 {
            let mut next = Vec::new();
            for a in cur {
                let left = Interval::new(a.lo, a.hi.min(b.lo));
                let right = Interval::new(a.lo.max(b.hi), a.hi);
                if !left.is_empty() {
                    next.push(left);
                }
                if !right.is_empty() {
                    next.push(right);
                }
            }
            cur = next;
        }
        IntervalSet(cur)
    }
}

/// A product of two angle intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: Interval,
    pub y: Interval,
}

impl Rect {
    pub fn new(x: Interval, y: Interval) -> Self {
        Self { x, y }
    }

    /// All products of the pieces of two interval sets.
    pub fn products(a: &IntervalSet, b: &IntervalSet) -> Vec<Rect> {
        let mut out = Vec::new();
        for x in &a.0 {
            for y in &b.0 {
                out.push(Rect::new(*x, *y));
            }
        }
        out
    }
}

/// Panel boundaries shared by both axes: `kinks` split panels, `graded`
/// points additionally get geometrically refined panels around them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    pub kinks: Vec<f64>,
    pub graded: Vec<f64>,
}

impl Breakpoints {
    pub fn new(mut kinks: Vec<f64>, mut graded: Vec<f64>) -> Self {
        kinks.sort_by(f64::total_cmp);
        graded.sort_by(f64::total_cmp);
        Self { kinks, graded }
    }

    pub fn merged(&self, other: &Breakpoints) -> Breakpoints {
        let mut kinks = self.kinks.clone();
        kinks.extend_from_slice(&other.kinks);
        let mut graded = self.graded.clone();
        graded.extend_from_slice(&other.graded);
        Breakpoints::new(kinks, graded)
    }

    fn within<'a>(sorted: &'a [f64], iv: &Interval) -> impl Iterator<Item = f64> + 'a {
        let start = sorted.partition_point(|&x| x <= iv.lo);
        let (lo, hi) = (iv.lo, iv.hi);
        sorted[start..].iter().copied().take_while(move |&x| x < hi).filter(move |&x| x > lo)
    }

    /// Gauss nodes and weights on `iv` at a refinement level.
    fn axis_rule(&self, iv: &Interval, grid: usize, level: usize) -> Vec<(f64, f64)> {
        let len = iv.len();
        let mut cuts: Vec<f64> = Self::within(&self.kinks, iv).collect();
        for s in self.graded.iter().copied().filter(|&s| s >= iv.lo && s <= iv.hi) {
            cuts.push(s);
            for k in 1..=GRADING_DEPTH {
                let h = len * 0.5f64.powi(k);
                cuts.extend([s - h, s + h]);
            }
        }
        cuts.retain(|&x| x > iv.lo && x < iv.hi);
        cuts.push(iv.lo);
        cuts.push(iv.hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
        let target = 2.0 * PI / (grid as f64 * (1u64 << level) as f64);
        let rule = gauss_rule();
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m = ((b - a) / target).ceil().max(1.0) as usize;
            let h = (b - a) / m as f64;
            for j in 0..m {
                let lo = a + j as f64 * h;
                let hi = if j + 1 == m { b } else { lo + h };
                let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                out.extend(rule.iter().map(|&(x, wt)| (mid + half * x, half * wt)));
            }
        }
        out
    }
}

/// Sum in a fixed binary tree, independent of thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// One fixed-level tensor quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSum {
    pub value: f64,
    /// `Σ |w f|`, the scale for round-off.
    pub abs_sum: f64,
}

/// `Σ_rects ∬ f(prep(x), prep(y)) dx dy` at a fixed level. `prep` runs once
/// per axis node.
pub fn integrate_at_level<P, A, F>(
    rects: &[Rect],
    breaks: &Breakpoints,
    grid: usize,
    level: usize,
    prep: A,
    f: F,
) -> LevelSum
where
    P: Send + Sync,
    A: Fn(f64) -> P + Sync,
    F: Fn(&P, &P) -> f64 + Sync,
{
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for r in rects {
        let xs = breaks.axis_rule(&r.x, grid, level);
        let ys = breaks.axis_rule(&r.y, grid, level);
        let px: Vec<P> = xs.par_iter().map(|&(x, _)| prep(x)).collect();
        let py: Vec<P> = ys.par_iter().map(|&(y, _)| prep(y)).collect();
        let part: Vec<(f64, f64)> = px
            .par_iter()
            .zip(xs.par_iter())
            .map(|(p, &(_, wx))| {
                let (mut s, mut a) = (0.0, 0.0);
                for (q, &(_, wy)) in py.iter().zip(&ys) {
                    let v = wy * f(p, q);
                    s += v;
                    a += v.abs();
                }
                (wx * s, wx.abs() * a)
            })
            .collect();
        rows.extend(part);
    }
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let abs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    LevelSum {
        value: pairwise_sum(&values),
        abs_sum: pairwise_sum(&abs),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub value: f64,
    /// Estimates at levels `0, 1, …`.
    pub estimates: Vec<f64>,
    pub level: usize,
    pub tolerance: f64,
    /// `|Q_L − Q_{L−1}|` at the accepted level.
    pub error_estimate: f64,
}

/// Nested dyadic refinement until two successive levels agree to the
/// relative tolerance (or to round-off of `Σ|w f|`).
pub fn integrate<P, A, F>(
    rects: &[Rect],
    breaks: &Breakpoints,
    spec: &QuadratureSpec,
    prep: A,
    f: F,
) -> Result<QuadratureReport>
where
    P: Send + Sync,
    A: Fn(f64) -> P + Sync,
    F: Fn(&P, &P) -> f64 + Sync,
{
    spec.validate()?;
    let mut estimates = Vec::new();
    for level in 0..spec.max_levels {
        let s = integrate_at_level(rects, breaks, spec.base_grid, level, &prep, &f);
        estimates.push(s.value);
        if level > 0 {
            let diff = (s.value - estimates[level - 1]).abs();
            if diff <= spec.refinement_tol * s.value.abs() || diff <= 64.0 * f64::EPSILON * s.abs_sum {
                return Ok(QuadratureReport {
                    value: s.value,
                    estimates,
                    level,
                    tolerance: spec.refinement_tol,
                    error_estimate: diff,
                });
            }
        }
    }
    let n = estimates.len();
    Err(Error::NonConvergence {
        levels: n,
        last: estimates[n - 1],
        previous: if n > 1 { estimates[n - 2] } else { f64::NAN },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub value: f64,
    pub error_estimate: f64,
    pub steps: Vec<f64>,
    /// Central differences, one per step.
    pub differences: Vec<f64>,
    /// Richardson table, row `k` holding extrapolations up to order `k`.
    pub table: Vec<Vec<f64>>,
    /// Set when successive differences fail to shrink along the ladder.
    pub warning: Option<String>,
}

/// Central differences of `f` at `t0` on a decreasing step ladder,
/// extrapolated in `h²`.
pub fn fd_derivative<F>(f: F, t0: f64, steps: &[f64]) -> Result<FdReport>
where
    F: Fn(f64) -> Result<f64>,
{
    if steps.is_empty() || steps.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::Config {
            field: "fd_steps".into(),
            message: "need at least one positive step".into(),
        });
    }
    let mut differences = Vec::with_capacity(steps.len());
    for &h in steps {
        differences.push((f(t0 + h)? - f(t0 - h)?) / (2.0 * h));
    }
    let n = steps.len();
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = vec![differences[k]];
        for j in 1..=k {
            let r = (steps[k - j] / steps[k]).powi(2);
            let prev = row[j - 1];
            row.push(prev + (prev - table[k - 1][j - 1]) / (r - 1.0));
        }
        table.push(row);
    }
    let value = table[n - 1][n - 1];
    let error_estimate = if n == 1 {
        f64::INFINITY
    } else {
        (value - table[n - 1][n - 2]).abs().max((value - table[n - 2][n - 2]).abs())
    };
    let gaps: Vec<f64> = differences.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let warning = (gaps.len() >= 2 && gaps.windows(2).any(|w| w[1] >= w[0] && w[1] > 0.0)).then(|| {
        format!("central differences do not settle along the ladder: {differences:?}")
    });
    Ok(FdReport {
        value,
        error_estimate,
        steps: steps.to_vec(),
        differences,
        table,
        warning,
    })
}

/// Default central-difference ladder in the deformation parameter.
pub const DEFAULT_FD_STEPS: [f64; 3] = [2e-2, 1e-2, 5e-3];

/// Finite differences of `t ↦ f(level, t)`, raising the fixed quadrature
/// level from 1 until two successive derivative estimates agree to 1e-7
/// relative. Returns the report and the level reached.
pub fn fd_derivative_refined<F>(f: F, t0: f64, steps: &[f64], max_levels: usize) -> Result<(FdReport, usize)>
where
    F: Fn(usize, f64) -> Result<f64>,
{
    let mut prev: Option<FdReport> = None;
    for level in 1..=max_levels.max(2) {
        let fd = fd_derivative(|t| f(level, t), t0, steps)?;
        if let Some(p) = &prev {
            let scale = fd.value.abs().max(fd.error_estimate).max(1e-300);
            if (fd.value - p.value).abs() <= 1e-7 * scale {
                return Ok((fd, level));
            }
        }
        prev = Some(fd);
    }
    let last = prev.expect("at least two levels");
    Err(Error::NonConvergence {
        levels: max_levels,
        last: last.value,
        previous: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fd_examples() {
        let r = fd_derivative(|t| Ok(t * t), 1.0, &[0.1, 0.05]).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-13);
        let r = fd_derivative(|t: f64| Ok(t.sin()), 0.0, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-9);
        assert!(r.warning.is_none());
        assert!(fd_derivative(Ok, 0.0, &[]).is_err());
    }

    #[test]
    fn refined_fd_stops_when_levels_agree() {
        let (r, level) =
            fd_derivative_refined(|l, t: f64| Ok(t.exp() + 2f64.powi(-(40 * l as i32))), 0.0, &DEFAULT_FD_STEPS, 6).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-8);
        assert_eq!(level, 2);
    }

    #[test]
    fn interval_sets() {
        let arc = CircleArc::ccw(6.0, 0.5);
        let s = IntervalSet::from_arc(&arc);
        assert_eq!(s.0.len(), 2);
        let box_ = IntervalSet::from_interval(Interval::new(0.2, 6.1));
        let inside = box_.intersect(&s);
        let outside = box_.subtract(&s);
        let total: f64 = inside.0.iter().chain(&outside.0).map(Interval::len).sum();
        assert_abs_diff_eq!(total, 5.9, epsilon = 1e-14);
        assert_eq!(outside.0, vec![Interval::new(0.5, 6.0)]);
    }

    #[test]
    fn graded_rule_handles_cusp() {
        // ∫₀¹∫₀¹ |x − 1/3|^{1/2} dy dx
        let exact = (2.0 / 3.0) * ((1.0f64 / 3.0).powf(1.5) + (2.0f64 / 3.0).powf(1.5));
        let b = Breakpoints::new(vec![], vec![1.0 / 3.0]);
        let r = integrate(
            &[Rect::new(Interval::new(0.0, 1.0), Interval::new(0.0, 1.0))],
            &b,
            &QuadratureSpec::default(),
            |x| x,
            |x, _| (x - 1.0 / 3.0).abs().sqrt(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, exact, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_and_nonconvergent() {
        let rects = [Rect::new(Interval::new(0.0, 2.0), Interval::new(1.0, 3.0))];
        let b = Breakpoints::default();
        let f = |x: &f64, y: &f64| (x * y).sin();
        let a = integrate_at_level(&rects, &b, 8, 2, |x| x, f);
        let c = integrate_at_level(&rects, &b, 8, 2, |x| x, f);
        assert_eq!(a.value.to_bits(), c.value.to_bits());
        let spec = QuadratureSpec {
            base_grid: 8,
            refinement_tol: 1e-15,
            max_levels: 2,
        };
        // a jump that is not declared as a kink
        let e = integrate(&rects, &b, &spec, |x| x, |x, _| if *x < 0.77 { 1.0 } else { 0.0 });
        assert!(matches!(e, Err(Error::NonConvergence { levels: 2, .. })));
    }
}

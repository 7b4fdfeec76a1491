//! Piecewise-Möbius boundary homeomorphisms: elementary earthquakes along a
//! leaf, triangle factors, and finite ordered products of them.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cocycle::TransverseCocycle;
use crate::error::{domain, Result};
use crate::farey::{FareyLamination, IdealTriangle, SpanningFamily};
use crate::hyperbolic::{
    dist_to_geodesic, real_sign, BoundaryPoint, Chart, CircleArc, Geodesic, HPoint, MobiusMap,
    GEOMETRIC_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Leaf,
    Triangle,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum Support {
    Leaf(Geodesic),
    Triangle(IdealTriangle),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Factor {
    pub support: Support,
    pub amount: f64,
}

impl Factor {
    pub fn leaf(g: Geodesic, amount: f64) -> Self {
        Self {
            support: Support::Leaf(g),
            amount,
        }
    }

    pub fn triangle(t: IdealTriangle, amount: f64) -> Self {
        Self {
            support: Support::Triangle(t),
            amount,
        }
    }

    pub fn kind(&self) -> FactorKind {
        match self.support {
            Support::Leaf(_) => FactorKind::Leaf,
            Support::Triangle(_) => FactorKind::Triangle,
        }
    }

    /// Elementary pieces in application order.
    fn pieces(&self) -> Vec<(Geodesic, f64)> {
        match self.support {
            Support::Leaf(g) => vec![(g, self.amount)],
            // E_T^a = E_{g3}^a ∘ E_{g1}^{-a} ∘ E_{g2}^{-a}
            Support::Triangle(t) => vec![(t.g2, -self.amount), (t.g1, -self.amount), (t.g3, self.amount)],
        }
    }

    /// The geodesic whose far side carries the factor.
    fn outer(&self) -> Geodesic {
        match self.support {
            Support::Leaf(g) => g,
            Support::Triangle(t) => t.g3,
        }
    }
}

/// One elementary translation, precomputed for evaluation.
#[derive(Clone, Debug)]
struct Piece {
    amount: f64,
    normalizer: MobiusMap,
    base_sign: i8,
    translation: MobiusMap,
    arc: CircleArc,
    conj: MobiusMap,
}

impl Piece {
    fn new(chart: &Chart, g: &Geodesic, amount: f64) -> Result<Self> {
        let base = chart.base();
        if dist_to_geodesic(&base, g).0 <= GEOMETRIC_TOL {
            return domain(format!("base point lies on the geodesic {} → {}", g.from, g.to));
        }
        let n = g.raw_normalizer();
        let nb = n.apply_point(&base);
        let base_sign = if nb.x > 0.0 { 1 } else { -1 };
        let half = 0.5 * amount;
        let d = MobiusMap {
            a: half.exp(),
            b: 0.0,
            c: 0.0,
            d: (-half).exp(),
        };
        let translation = (n.inverse() * d * n).renormalized();
        Ok(Self {
            amount,
            normalizer: n,
            base_sign,
            translation,
            arc: CircleArc::far_side(chart.theta(&g.from), chart.theta(&g.to)),
            conj: chart.conjugate(&translation).renormalized(),
        })
    }

    fn apply(&self, x: &BoundaryPoint) -> BoundaryPoint {
        let (x0, x1) = x.coords();
        let (p, q) = self.normalizer.act(x0, x1);
        if real_sign(p, q) == -self.base_sign {
            self.translation.apply(x)
        } else {
            *x
        }
    }
}

/// Containment forest of the factors' far-side arcs, used when supports are
/// laminar and inner factors are applied before the factors around them.
#[derive(Clone, Debug)]
struct ArcForest {
    cut: f64,
    /// `(lo, hi)` in coordinates measured from `cut`.
    span: Vec<(f64, f64)>,
    roots: Vec<usize>,
    children: Vec<Vec<usize>>,
}

const ARC_TOL: f64 = 1e-12;

impl ArcForest {
    fn build(arcs: &[CircleArc], extra_cut: f64) -> Option<Self> {
        let mut candidates = vec![extra_cut];
        candidates.extend(arcs.iter().take(4).map(|a| a.start));
        let cut = candidates
            .into_iter()
            .find(|&c| arcs.iter().all(|a| !a.contains(c)))?;
        let span: Vec<(f64, f64)> = arcs
            .iter()
            .map(|a| {
                let lo = (a.start - cut).rem_euclid(2.0 * PI);
                (lo, lo + a.len)
            })
            .collect();
        let mut order: Vec<usize> = (0..arcs.len()).collect();
        order.sort_by(|&i, &j| {
            span[i]
                .0
                .total_cmp(&span[j].0)
                .then(span[j].1.total_cmp(&span[i].1))
                .then(j.cmp(&i))
        });
        let mut roots = Vec::new();
        let mut children = vec![Vec::new(); arcs.len()];
        let mut stack: Vec<usize> = Vec::new();
        for i in order {
            let (lo, hi) = span[i];
            while let Some(&top) = stack.last() {
                if span[top].1 <= lo + ARC_TOL {
                    stack.pop();
                } else {
                    break;
                }
            }
            match stack.last() {
                Some(&top) => {
                    if hi > span[top].1 + ARC_TOL {
                        return None;
                    }
                    // an enclosing factor must act after everything inside it
                    let equal = (span[top].0 - lo).abs() <= ARC_TOL && (span[top].1 - hi).abs() <= ARC_TOL;
                    if !equal && top < i {
                        return None;
                    }
                    children[top].push(i);
                }
                None => roots.push(i),
            }
            stack.push(i);
        }
        Some(Self {
            cut,
            span,
            roots,
            children,
        })
    }

    /// Indices of arcs containing `theta`, unordered.
    fn containing(&self, theta: f64, out: &mut Vec<usize>) {
        out.clear();
        let x = (theta - self.cut).rem_euclid(2.0 * PI);
        let mut level = &self.roots;
        loop {
            // siblings are disjoint: only the last one starting before x can
            // contain it
            let k = level.partition_point(|&i| self.span[i].0 < x);
            let found = (k > 0).then(|| level[k - 1]).filter(|&i| x < self.span[i].1);
            match found {
                Some(i) => {
                    out.push(i);
                    level = &self.children[i];
                }
                None => return,
            }
        }
    }
}

/// A finite ordered composition of elementary and triangle earthquakes.
///
/// Factors are stored in application order: `factors[0]` acts first.
#[derive(Clone, Debug)]
pub struct EarthquakeMap {
    chart: Chart,
    factors: Vec<Factor>,
    pieces: Vec<Vec<Piece>>,
    arcs: Vec<CircleArc>,
    forest: Option<ArcForest>,
}

impl EarthquakeMap {
    pub fn from_factors(base: HPoint, factors: Vec<Factor>) -> Result<Self> {
        let chart = Chart::new(base);
        let mut pieces = Vec::with_capacity(factors.len());
        let mut arcs = Vec::with_capacity(factors.len());
        for f in &factors {
            let p = f
                .pieces()
                .into_iter()
                .map(|(g, a)| Piece::new(&chart, &g, a))
                .collect::<Result<Vec<_>>>()?;
            let g = f.outer();
            arcs.push(CircleArc::far_side(chart.theta(&g.from), chart.theta(&g.to)));
            pieces.push(p);
        }
        let forest = ArcForest::build(&arcs, chart.theta(&BoundaryPoint::INFINITY));
        Ok(Self {
            chart,
            factors,
            pieces,
            arcs,
            forest,
        })
    }

    pub fn identity(base: HPoint) -> Self {
        Self::from_factors(base, Vec::new()).expect("empty product")
    }

    /// `E_g^a`: the identity on the base-point side of `g`, translation by `a`
    /// along `g` on the far side.
    pub fn elementary(base: HPoint, g: Geodesic, a: f64) -> Result<Self> {
        Self::from_factors(base, vec![Factor::leaf(g, a)])
    }

    /// `E_T^a = E_{g₃}^a ∘ E_{g₁}^{-a} ∘ E_{g₂}^{-a}`.
    pub fn triangle_factor(lam: &FareyLamination, t: &IdealTriangle, a: f64) -> Result<Self> {
        Self::from_factors(lam.base(), vec![Factor::triangle(*t, a)])
    }

    /// `E_𝒰^α`: triangle factors `E_T^{α(T)}` for every `T` below the family,
    /// outermost last, after the elementary factors `E_{g₃^U}^{α(U)}` of
    /// the members.
    pub fn truncated_shear(
        lam: &FareyLamination,
        c: &TransverseCocycle,
        family: &SpanningFamily,
    ) -> Result<Self> {
        let all: Vec<IdealTriangle> = family.below.iter().chain(&family.members).copied().collect();
        let alpha = c.alpha_map(lam, &all)?;
        let mut factors: Vec<Factor> = family
            .members
            .iter()
            .map(|u| Factor::leaf(u.g3, alpha[&u.tri.key()]))
            .collect();
        factors.extend(
            family
                .below
                .iter()
                .rev()
                .map(|t| Factor::triangle(*t, alpha[&t.tri.key()])),
        );
        let map = Self::from_factors(lam.base(), factors)?;
        map.check_order()?;
        Ok(map)
    }

    /// Drops the support index, so evaluation scans every factor.
    pub fn without_index(mut self) -> Self {
        self.forest = None;
        self
    }

    pub fn is_indexed(&self) -> bool {
        self.forest.is_some()
    }

    pub fn base(&self) -> HPoint {
        self.chart.base()
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Errors if an enclosing factor acts before one whose support it
    /// contains, i.e. if the separation order is violated.
    pub fn check_order(&self) -> Result<()> {
        if self.forest.is_some() {
            return Ok(());
        }
        for (i, a) in self.arcs.iter().enumerate() {
            for (j, b) in self.arcs.iter().enumerate().skip(i + 1) {
                if strictly_inside(b, a) {
                    return domain(format!("factor {i} encloses factor {j} but acts first"));
                }
            }
        }
        Ok(())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &EarthquakeMap) -> Result<Self> {
        let mut factors = other.factors.clone();
        factors.extend_from_slice(&self.factors);
        Self::from_factors(self.base(), factors)
    }

    /// Exact inverse, with triangle factors expanded into leaf factors.
    pub fn inverse(&self) -> Result<Self> {
        let mut factors = Vec::new();
        for f in self.factors.iter().rev() {
            for (g, a) in f.pieces().into_iter().rev() {
                factors.push(Factor::leaf(g, -a));
            }
        }
        Self::from_factors(self.base(), factors)
    }

    fn with_active<R>(&self, theta: f64, f: impl FnOnce(&mut dyn Iterator<Item = usize>) -> R) -> R {
        match &self.forest {
            Some(forest) => {
                let mut idx = Vec::with_capacity(32);
                forest.containing(theta, &mut idx);
                idx.sort_unstable();
                f(&mut idx.into_iter())
            }
            None => f(&mut (0..self.factors.len())),
        }
    }

    /// Image angle and angular derivative at a chart angle.
    pub fn eval_theta(&self, theta: f64) -> (f64, f64) {
        self.with_active(theta, |active| {
            let (mut x, mut deriv) = (theta, 1.0);
            for i in active {
                for p in &self.pieces[i] {
                    if p.amount != 0.0 && p.arc.contains(x) {
                        let (y, d) = Chart::act_with_derivative(&p.conj, x);
                        x = y;
                        deriv *= d;
                    }
                }
            }
            (x, deriv)
        })
    }

    pub fn apply(&self, x: &BoundaryPoint) -> BoundaryPoint {
        let theta = self.chart.theta(x);
        self.with_active(theta, |active| {
            let mut y = *x;
            for i in active {
                for p in &self.pieces[i] {
                    if p.amount != 0.0 {
                        y = p.apply(&y);
                    }
                }
            }
            y
        })
    }

    pub fn apply_to_geodesic(&self, h: &Geodesic) -> Geodesic {
        Geodesic {
            from: self.apply(&h.from),
            to: self.apply(&h.to),
        }
    }

    /// Chart angles of every piece endpoint, sorted and deduplicated. The map
    /// is real-analytic between consecutive breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .pieces
            .iter()
            .flatten()
            .flat_map(|p| [p.arc.start, p.arc.end()])
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= ARC_TOL);
        out
    }

    /// Strict circular monotonicity on `n` equally spaced chart angles.
    pub fn is_monotone_on_samples(&self, n: usize) -> bool {
        let images: Vec<f64> = (0..n)
            .map(|k| self.eval_theta(2.0 * PI * (k as f64 + 0.5) / n as f64).0)
            .collect();
        let total: f64 = (0..n)
            .map(|k| {
                let step = (images[(k + 1) % n] - images[k]).rem_euclid(2.0 * PI);
                if step == 0.0 {
                    f64::INFINITY
                } else {
                    step
                }
            })
            .sum();
        (total - 2.0 * PI).abs() < 1e-9
    }

    /// Writes `theta, image` rows at `n` equally spaced chart angles.
    pub fn write_boundary_csv<W: Write>(&self, n: usize, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["theta", "image"])?;
        for k in 0..n {
            let theta = 2.0 * PI * k as f64 / n as f64;
            let (y, _) = self.eval_theta(theta);
            wtr.write_record([format!("{theta:.15e}"), format!("{y:.15e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn strictly_inside(inner: &CircleArc, outer: &CircleArc) -> bool {
    if inner.len >= outer.len - ARC_TOL {
        return false;
    }
    let mut o = outer.offset(inner.start);
    if o > 2.0 * PI - ARC_TOL {
        o = 0.0;
    }
    o + inner.len <= outer.len + ARC_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farey::{FareyLeaf, Fraction};
    use approx::assert_abs_diff_eq;

    fn fr(s: &str) -> Fraction {
        s.parse().unwrap()
    }

    fn real(x: &BoundaryPoint) -> f64 {
        x.to_real().unwrap()
    }

    fn samples(n: usize) -> Vec<BoundaryPoint> {
        (0..n).map(|k| BoundaryPoint::finite(-7.3 + 14.1 * k as f64 / n as f64)).collect()
    }

    #[test]
    fn elementary_along_imaginary_axis() {
        let base = HPoint::new(-1.0, 1.0).unwrap();
        let g = Geodesic::new(BoundaryPoint::finite(0.0), BoundaryPoint::INFINITY).unwrap();
        let e = EarthquakeMap::elementary(base, g, 2f64.ln()).unwrap();
        assert_abs_diff_eq!(real(&e.apply(&BoundaryPoint::finite(3.0))), 6.0, epsilon = 1e-12);
        assert_eq!(real(&e.apply(&BoundaryPoint::finite(-5.0))), -5.0);
        let h = e.apply_to_geodesic(&Geodesic::from_reals(3.0, -5.0).unwrap());
        assert_abs_diff_eq!(real(&h.from), 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(real(&h.to), -5.0, epsilon = 1e-12);
        let theta = e.chart().theta(&BoundaryPoint::finite(3.0));
        let (img, _) = e.eval_theta(theta);
        assert_abs_diff_eq!(img, e.chart().theta(&BoundaryPoint::finite(6.0)), epsilon = 1e-12);
        assert!(EarthquakeMap::elementary(HPoint::I, g, 1.0).is_err());
    }

    #[test]
    fn group_law_and_identity() {
        let lam = FareyLamination::default();
        let g = lam.triangle(fr("0"), fr("1/2"), fr("1")).unwrap().g1;
        let base = lam.base();
        let zero = EarthquakeMap::elementary(base, g, 0.0).unwrap();
        let ab = EarthquakeMap::elementary(base, g, 0.3)
            .unwrap()
            .compose(&EarthquakeMap::elementary(base, g, -0.7).unwrap())
            .unwrap();
        let sum = EarthquakeMap::elementary(base, g, -0.4).unwrap();
        for x in samples(40) {
            assert_eq!(zero.apply(&x), x);
            let (y, z) = (ab.apply(&x), sum.apply(&x));
            assert!(y == z, "{y} vs {z}");
            assert_abs_diff_eq!(ab.eval_theta(0.1 + real(&x).atan() + 1.5).0, sum.eval_theta(0.1 + real(&x).atan() + 1.5).0, epsilon = 1e-10);
        }
        let inv = ab.inverse().unwrap().compose(&ab).unwrap();
        for x in samples(40) {
            assert_abs_diff_eq!(real(&inv.apply(&x)), real(&x), epsilon = 1e-9);
        }
    }

    #[test]
    fn triangle_factor_matches_recomposition() {
        let lam = FareyLamination::default();
        let t = lam.triangle(fr("0"), fr("1/2"), fr("1")).unwrap();
        let base = lam.base();
        let f = EarthquakeMap::triangle_factor(&lam, &t, 0.3).unwrap();
        let e3 = EarthquakeMap::elementary(base, t.g3, 0.3).unwrap();
        let e1 = EarthquakeMap::elementary(base, t.g1, -0.3).unwrap();
        let e2 = EarthquakeMap::elementary(base, t.g2, -0.3).unwrap();
        for k in 0..10 {
            let x = BoundaryPoint::finite(-0.2 + 0.14 * k as f64);
            let y = e3.apply(&e1.apply(&e2.apply(&x)));
            assert_abs_diff_eq!(real(&f.apply(&x)), real(&y), epsilon = 1e-12);
        }
        // fixed on the base-point side of g3
        for x in [-3.0, -0.5, 1.5, 40.0] {
            assert_eq!(real(&f.apply(&BoundaryPoint::finite(x))), x);
        }
        assert!(f.is_monotone_on_samples(512));
    }

    #[test]
    fn index_agrees_with_scan() {
        let lam = FareyLamination::default();
        let fam = lam.spanning_family(6.0);
        let c = TransverseCocycle::seeded_bounded(3, 0.4).unwrap();
        let e = EarthquakeMap::truncated_shear(&lam, &c, &fam).unwrap();
        assert!(e.is_indexed());
        let scan = e.clone().without_index();
        for k in 0..997 {
            let theta = 2.0 * PI * (k as f64 + 0.31) / 997.0;
            let (a, da) = e.eval_theta(theta);
            let (b, db) = scan.eval_theta(theta);
            assert_eq!(a, b);
            assert_eq!(da, db);
        }
        assert!(e.is_monotone_on_samples(512));
    }

    #[test]
    fn zero_cocycle_and_order_check() {
        let lam = FareyLamination::default();
        let fam = lam.spanning_family(5.0);
        let e = EarthquakeMap::truncated_shear(&lam, &TransverseCocycle::zero(), &fam).unwrap();
        for x in samples(30) {
            assert_eq!(e.apply(&x), x);
        }
        let t = lam.triangle(fr("0"), fr("1/2"), fr("1")).unwrap();
        let child = lam.triangle(fr("0"), fr("1/3"), fr("1/2")).unwrap();
        let bad = EarthquakeMap::from_factors(
            lam.base(),
            vec![Factor::triangle(t, 0.2), Factor::triangle(child, 0.1)],
        )
        .unwrap();
        assert!(!bad.is_indexed());
        assert!(bad.check_order().is_err());
        let good = EarthquakeMap::from_factors(
            lam.base(),
            vec![Factor::triangle(child, 0.1), Factor::triangle(t, 0.2)],
        )
        .unwrap();
        assert!(good.check_order().is_ok());
        let leaf: FareyLeaf = "0/1,1/2".parse().unwrap();
        assert_eq!(leaf, t.tri.g1());
    }
}

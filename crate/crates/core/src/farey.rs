//! The Farey tessellation as a maximal geodesic lamination of the upper
//! half-plane.
//!
//! Vertices are kept as exact reduced fractions (with `∞ = 1/0`) so that the
//! separation order and Farey adjacency never depend on rounding; the
//! hyperbolic quantities `D_T`, `u_T`, `x_T`, `y_T` and the incenter `O_T` are
//! computed in floating point from those labels.
//!
//! Every triangle other than the base triangle `T_O = (0, 1, ∞)` is stored
//! with its vertices `(u, c, w)` in counterclockwise order along its far arc,
//! so that the side facing the base point is `g₃ = u → w`, and
//! `g₁ = u → c`, `g₂ = c → w`. All three orientations put the base point on
//! the left.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::hyperbolic::{dist_to_geodesic, BoundaryPoint, Chart, Geodesic, HPoint};

/// `½ log 3 + log 2`, the additive constant relating `d(O, O_T)` to
/// `D_T + |u_T|`.
pub const CENTER_OFFSET_BOUND: f64 = 1.242_453_324_894_000_3;

/// A reduced fraction `p/q` with `q > 0`, or `∞ = 1/0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fraction {
    pub p: i64,
    pub q: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Fraction {
    pub const INFINITY: Fraction = Fraction { p: 1, q: 0 };
    pub const ZERO: Fraction = Fraction { p: 0, q: 1 };
    pub const ONE: Fraction = Fraction { p: 1, q: 1 };

    pub fn new(p: i64, q: i64) -> Result<Self> {
        if p == 0 && q == 0 {
            return domain("0/0 is not a boundary point");
        }
        Ok(Self::reduce(p, q))
    }

    fn reduce(mut p: i64, mut q: i64) -> Self {
        if q == 0 {
            return Self::INFINITY;
        }
        if q < 0 {
            p = -p;
            q = -q;
        }
        let g = gcd(p, q);
        Self { p: p / g, q: q / g }
    }

    pub fn is_infinite(&self) -> bool {
        self.q == 0
    }

    /// `ps - qr`, exact.
    pub fn det(&self, other: &Fraction) -> i128 {
        self.p as i128 * other.q as i128 - other.p as i128 * self.q as i128
    }

    pub fn is_farey_neighbor(&self, other: &Fraction) -> bool {
        self.det(other).abs() == 1
    }

    /// Exact comparison on `R ∪ {∞}` with `∞` the largest element.
    pub fn cmp_value(&self, other: &Fraction) -> Ordering {
        match (self.is_infinite(), other.is_infinite()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => (self.p as i128 * other.q as i128).cmp(&(other.p as i128 * self.q as i128)),
        }
    }

    pub fn to_boundary(&self) -> BoundaryPoint {
        BoundaryPoint::from_pair(self.p as f64, self.q as f64)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            self.p as f64 / self.q as f64
        }
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" || s == "∞" {
            return Ok(Self::INFINITY);
        }
        let parse = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::Domain(format!("cannot parse fraction `{s}`")))
        };
        match s.split_once('/') {
            Some((p, q)) => Fraction::new(parse(p)?, parse(q)?),
            None => Fraction::new(parse(s)?, 1),
        }
    }
}

/// `a`, `b`, `c` in counterclockwise (increasing, wrapping through `∞`)
/// order, all distinct.
pub fn ccw(a: &Fraction, b: &Fraction, c: &Fraction) -> bool {
    let lt = |x: &Fraction, y: &Fraction| x.cmp_value(y) == Ordering::Less;
    (lt(a, b) && lt(b, c)) || (lt(b, c) && lt(c, a)) || (lt(c, a) && lt(a, b))
}

/// `x` lies on the closed counterclockwise arc from `from` to `to`.
pub fn in_closed_arc(from: &Fraction, to: &Fraction, x: &Fraction) -> bool {
    x == from || x == to || ccw(from, x, to)
}

/// The third vertex of the Farey triangle on the other side of the edge
/// `{a, b}` from `known`.
pub fn opposite_vertex(a: &Fraction, b: &Fraction, known: &Fraction) -> Fraction {
    let sum = Fraction::reduce(a.p + b.p, a.q + b.q);
    if sum == *known {
        Fraction::reduce(a.p - b.p, a.q - b.q)
    } else {
        sum
    }
}

/// An unoriented leaf of the Farey tessellation, endpoints in increasing order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FareyLeaf {
    pub a: Fraction,
    pub b: Fraction,
}

impl FareyLeaf {
    pub fn new(x: Fraction, y: Fraction) -> Result<Self> {
        if !x.is_farey_neighbor(&y) {
            return domain(format!("{x} and {y} are not Farey neighbors"));
        }
        Ok(Self::ordered(x, y))
    }

    fn ordered(x: Fraction, y: Fraction) -> Self {
        if x.cmp_value(&y) == Ordering::Less {
            Self { a: x, b: y }
        } else {
            Self { a: y, b: x }
        }
    }
}

impl fmt::Display for FareyLeaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

impl FromStr for FareyLeaf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| Error::Domain(format!("leaf `{s}` must be `p/q,r/s`")))?;
        FareyLeaf::new(x.parse()?, y.parse()?)
    }
}

/// A leaf together with its depth: the tree depth of the triangle adjacent to
/// it on the base-point side (the three sides of `T_O` have depth 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LeafRef {
    pub leaf: FareyLeaf,
    pub depth: u32,
}

/// Combinatorial data of a non-base triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FareyTriangle {
    /// Vertices counterclockwise along the far arc: `g₃ = u → w`.
    pub u: Fraction,
    pub c: Fraction,
    pub w: Fraction,
    /// Number of leaves crossed from `T_O`.
    pub depth: u32,
}

impl FareyTriangle {
    pub fn g1(&self) -> FareyLeaf {
        FareyLeaf::ordered(self.u, self.c)
    }

    pub fn g2(&self) -> FareyLeaf {
        FareyLeaf::ordered(self.c, self.w)
    }

    pub fn g3(&self) -> FareyLeaf {
        FareyLeaf::ordered(self.u, self.w)
    }

    /// Sorted vertex triple, an order-independent identifier.
    pub fn key(&self) -> [Fraction; 3] {
        let mut k = [self.u, self.c, self.w];
        k.sort();
        k
    }

    pub fn vertices(&self) -> [Fraction; 3] {
        [self.u, self.c, self.w]
    }

    /// Child across `g₁` (`first = true`) or `g₂`.
    pub fn child(&self, first: bool) -> FareyTriangle {
        let (a, b, other) = if first {
            (self.u, self.c, self.w)
        } else {
            (self.c, self.w, self.u)
        };
        FareyTriangle {
            u: a,
            c: opposite_vertex(&a, &b, &other),
            w: b,
            depth: self.depth + 1,
        }
    }

    /// Key of the parent triangle (across `g₃`); `T_O` for depth one.
    pub fn parent_key(&self) -> [Fraction; 3] {
        let mut k = [self.u, self.w, opposite_vertex(&self.u, &self.w, &self.c)];
        k.sort();
        k
    }

    /// The triangle lies beyond `g₃` of `self` (on the closed far arc).
    pub fn contains_behind(&self, other: &FareyTriangle) -> bool {
        other
            .vertices()
            .iter()
            .all(|v| in_closed_arc(&self.u, &self.w, v))
    }
}

impl fmt::Display for FareyTriangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.u, self.c, self.w)
    }
}

/// Vertex triple of the base triangle `T_O`.
pub fn base_triangle_key() -> [Fraction; 3] {
    let mut k = [Fraction::ZERO, Fraction::ONE, Fraction::INFINITY];
    k.sort();
    k
}

/// The three children of `T_O`, across `(0,1)`, `(1,∞)` and `(∞,0)`.
fn root_children() -> [FareyTriangle; 3] {
    let (z, o, inf) = (Fraction::ZERO, Fraction::ONE, Fraction::INFINITY);
    let mk = |u: Fraction, w: Fraction, known: Fraction| FareyTriangle {
        u,
        c: opposite_vertex(&u, &w, &known),
        w,
        depth: 1,
    };
    [mk(z, o, inf), mk(o, inf, z), mk(inf, z, o)]
}

/// A complementary triangle of the lamination with its geometry relative to
/// the base point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IdealTriangle {
    pub tri: FareyTriangle,
    pub g1: Geodesic,
    pub g2: Geodesic,
    pub g3: Geodesic,
    /// Distance from the base point to `g₃`.
    pub d: f64,
    /// Signed distance along `g₃` from `x_T` to `y_T`.
    pub u: f64,
    pub x_t: HPoint,
    pub y_t: HPoint,
    pub center: HPoint,
    /// `d(O, O_T)`.
    pub center_dist: f64,
}

impl IdealTriangle {
    pub fn depth(&self) -> u32 {
        self.tri.depth
    }

    pub fn side_labels(&self) -> (Geodesic, Geodesic, Geodesic) {
        (self.g1, self.g2, self.g3)
    }

    fn build(tri: FareyTriangle, base: &HPoint) -> Self {
        let (u, c, w) = (tri.u.to_boundary(), tri.c.to_boundary(), tri.w.to_boundary());
        let g3 = Geodesic { from: u, to: w };
        let g1 = Geodesic { from: u, to: c };
        let g2 = Geodesic { from: c, to: w };
        let (d, x_t) = dist_to_geodesic(base, &g3);
        let n = g3.raw_normalizer();
        let apex = n.apply(&c).to_real().unwrap_or(f64::INFINITY).abs();
        let o_height = n.apply_point(base).to_complex().norm();
        let y_t = n.inverse().apply_point(&HPoint { x: 0.0, y: apex });
        let center = incenter(&tri);
        Self {
            tri,
            g1,
            g2,
            g3,
            d,
            u: (apex / o_height).ln(),
            x_t,
            y_t,
            center,
            center_dist: base.dist(&center),
        }
    }
}

/// Incenter of an ideal triangle: image of `(1 + i√3)/2` under a map sending
/// `(0, 1, ∞)` to the vertices.
fn incenter(t: &FareyTriangle) -> HPoint {
    let (a, cc, b) = (t.u, t.c, t.w);
    let (a0, a1) = (a.p as f64, a.q as f64);
    let (b0, b1) = (b.p as f64, b.q as f64);
    let (c0, c1) = (cc.p as f64, cc.q as f64);
    // columns λ·b (image of ∞) and μ·a (image of 0) with λb + μa = c
    let det = b0 * a1 - a0 * b1;
    let lambda = (c0 * a1 - a0 * c1) / det;
    let mu = (b0 * c1 - c0 * b1) / det;
    let (m00, m01, m10, m11) = (lambda * b0, mu * a0, lambda * b1, mu * a1);
    let orientation = m00 * m11 - m01 * m10;
    let omega = Complex64::new(0.5, 0.75f64.sqrt());
    let z = if orientation > 0.0 { omega } else { omega.conj() };
    let w = (m00 * z + m01) / (m10 * z + m11);
    HPoint { x: w.re, y: w.im }
}

/// Tree search output: every triangle visited plus parent links.
struct Explored {
    nodes: Vec<IdealTriangle>,
    parent: Vec<Option<usize>>,
    within: Vec<bool>,
}

/// The Farey tessellation seen from a base point inside `T_O`.
#[derive(Clone, Debug)]
pub struct FareyLamination {
    base: HPoint,
    chart: Chart,
}

impl Default for FareyLamination {
    fn default() -> Self {
        Self::new(Self::default_base()).expect("incenter of T_O is interior")
    }
}

impl FareyLamination {
    /// The incenter `(1 + i√3)/2` of `T_O`.
    pub fn default_base() -> HPoint {
        HPoint {
            x: 0.5,
            y: 0.75f64.sqrt(),
        }
    }

    /// The base point must lie strictly inside `T_O`, hence off every leaf.
    pub fn new(base: HPoint) -> Result<Self> {
        let inside = base.x > 0.0
            && base.x < 1.0
            && (base.to_complex() - Complex64::new(0.5, 0.0)).norm() > 0.5;
        if !inside {
            return domain(format!(
                "base point ({}, {}) is not inside the triangle (0, 1, ∞)",
                base.x, base.y
            ));
        }
        Ok(Self {
            base,
            chart: Chart::new(base),
        })
    }

    pub fn base(&self) -> HPoint {
        self.base
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn geometry(&self, tri: FareyTriangle) -> IdealTriangle {
        IdealTriangle::build(tri, &self.base)
    }

    fn explore(&self, radius: f64) -> Explored {
        let mut out = Explored {
            nodes: Vec::new(),
            parent: Vec::new(),
            within: Vec::new(),
        };
        let mut queue: VecDeque<(FareyTriangle, Option<usize>)> = VecDeque::new();
        for child in root_children() {
            let side = Geodesic {
                from: child.u.to_boundary(),
                to: child.w.to_boundary(),
            };
            if dist_to_geodesic(&self.base, &side).0 <= radius {
                queue.push_back((child, None));
            }
        }
        while let Some((tri, parent)) = queue.pop_front() {
            let t = self.geometry(tri);
            let idx = out.nodes.len();
            out.within.push(t.center_dist <= radius);
            out.nodes.push(t);
            out.parent.push(parent);
            // everything behind g_i is at least dist(O, g_i) away
            for (first, side) in [(true, t.g1), (false, t.g2)] {
                if dist_to_geodesic(&self.base, &side).0 <= radius {
                    queue.push_back((tri.child(first), Some(idx)));
                }
            }
        }
        out
    }

    /// All triangles `T ≠ T_O` with `d(O, O_T) ≤ radius`, parents before
    /// children.
    pub fn enumerate_triangles(&self, radius: f64) -> Vec<IdealTriangle> {
        let e = self.explore(radius);
        e.nodes
            .into_iter()
            .zip(e.within)
            .filter_map(|(t, w)| w.then_some(t))
            .collect()
    }

    /// Maximal elements of [`enumerate_triangles`](Self::enumerate_triangles)
    /// under the separation order, together with everything below them.
    pub fn spanning_family(&self, radius: f64) -> SpanningFamily {
        let e = self.explore(radius);
        let n = e.nodes.len();
        let mut has_selected_descendant = vec![false; n];
        let mut below = vec![false; n];
        for i in (0..n).filter(|&i| e.within[i]) {
            let mut p = e.parent[i];
            while let Some(j) = p {
                if has_selected_descendant[j] {
                    break;
                }
                has_selected_descendant[j] = true;
                p = e.parent[j];
            }
        }
        let members: Vec<usize> = (0..n)
            .filter(|&i| e.within[i] && !has_selected_descendant[i])
            .collect();
        for &m in &members {
            let mut p = e.parent[m];
            while let Some(j) = p {
                if below[j] {
                    break;
                }
                below[j] = true;
                p = e.parent[j];
            }
        }
        let mut members: Vec<IdealTriangle> = members.into_iter().map(|i| e.nodes[i]).collect();
        members.sort_by_key(|t| t.tri.key());
        SpanningFamily {
            radius,
            members,
            below: (0..n).filter(|&i| below[i]).map(|i| e.nodes[i]).collect(),
        }
    }

    /// `T < T2`: `T` separates the base point from `T2`.
    pub fn separates(&self, t: &IdealTriangle, t2: &IdealTriangle) -> bool {
        t.tri.key() != t2.tri.key() && t.tri.contains_behind(&t2.tri)
    }

    /// The triangle with the given vertices, located by descent from `T_O`.
    pub fn triangle(&self, a: Fraction, b: Fraction, c: Fraction) -> Result<IdealTriangle> {
        let path = self.path_to(a, b, c)?;
        Ok(self.geometry(*path.last().expect("path is nonempty")))
    }

    /// Side labels `(g₁, g₂, g₃)` for the triangle with the given vertices.
    pub fn side_labels(&self, a: Fraction, b: Fraction, c: Fraction) -> Result<(Geodesic, Geodesic, Geodesic)> {
        Ok(self.triangle(a, b, c)?.side_labels())
    }

    /// Triangles crossed from `T_O` to the target, in order (target last).
    pub fn path_to(&self, a: Fraction, b: Fraction, c: Fraction) -> Result<Vec<FareyTriangle>> {
        if !(a.is_farey_neighbor(&b) && b.is_farey_neighbor(&c) && a.is_farey_neighbor(&c)) {
            return domain(format!("({a}, {b}, {c}) is not a Farey triangle"));
        }
        let mut key = [a, b, c];
        key.sort();
        if key == base_triangle_key() {
            return domain("the base triangle T_O has no facing side");
        }
        let target = FareyTriangle {
            u: a,
            c: b,
            w: c,
            depth: 0,
        };
        let mut cur = root_children()
            .into_iter()
            .find(|t| t.contains_behind(&target))
            .expect("every non-base triangle lies behind a side of T_O");
        let mut path = vec![cur];
        while cur.key() != key {
            cur = [cur.child(true), cur.child(false)]
                .into_iter()
                .find(|t| t.contains_behind(&target))
                .ok_or_else(|| Error::Domain(format!("({a}, {b}, {c}) is not a Farey triangle")))?;
            path.push(cur);
        }
        Ok(path)
    }

    /// Writes `u, c, w, depth, D, u_T, center_dist` rows for plotting.
    pub fn write_csv<W: Write>(triangles: &[IdealTriangle], out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["u", "c", "w", "depth", "d", "u_t", "center_dist"])?;
        for t in triangles {
            wtr.write_record([
                t.tri.u.to_string(),
                t.tri.c.to_string(),
                t.tri.w.to_string(),
                t.tri.depth.to_string(),
                format!("{:.12e}", t.d),
                format!("{:.12e}", t.u),
                format!("{:.12e}", t.center_dist),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// A finite antichain of triangles with everything strictly below it.
#[derive(Clone, Debug)]
pub struct SpanningFamily {
    pub radius: f64,
    /// Pairwise incomparable members, sorted by vertex key.
    pub members: Vec<IdealTriangle>,
    /// `{T : T < U for some member U}`, parents before children.
    pub below: Vec<IdealTriangle>,
}

impl SpanningFamily {
    /// Builds a family from explicit members; `below` is recomputed from
    /// the tree paths.
    pub fn from_members(lam: &FareyLamination, members: Vec<IdealTriangle>) -> Result<Self> {
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if lam.separates(a, b) || lam.separates(b, a) || a.tri.key() == b.tri.key() {
                    return domain(format!("{} and {} are comparable", a.tri, b.tri));
                }
            }
        }
        let mut seen: HashMap<[Fraction; 3], FareyTriangle> = HashMap::new();
        for m in &members {
            let [a, b, c] = m.tri.vertices();
            for t in lam.path_to(a, b, c)?.into_iter().rev().skip(1) {
                seen.insert(t.key(), t);
            }
        }
        let mut below: Vec<FareyTriangle> = seen.into_values().collect();
        below.sort_by_key(|t| (t.depth, t.key()));
        let mut members = members;
        members.sort_by_key(|t| t.tri.key());
        Ok(Self {
            radius: f64::NAN,
            members,
            below: below.into_iter().map(|t| lam.geometry(t)).collect(),
        })
    }
}

/// The reflection `z ↦ 1 - z̄` on vertex labels; it preserves the
/// tessellation and `T_O`.
pub fn mirror(f: &Fraction) -> Fraction {
    if f.is_infinite() {
        *f
    } else {
        Fraction::reduce(f.q - f.p, f.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fr(s: &str) -> Fraction {
        s.parse().unwrap()
    }

    #[test]
    fn fractions() {
        assert_eq!(fr("2/4"), Fraction { p: 1, q: 2 });
        assert_eq!(fr("-1/-2"), Fraction { p: 1, q: 2 });
        assert_eq!(fr("3/0"), Fraction::INFINITY);
        assert!(fr("0/1").is_farey_neighbor(&fr("1/2")));
        assert!(!fr("0/1").is_farey_neighbor(&fr("2/1")));
        assert_eq!(opposite_vertex(&fr("0/1"), &fr("1/1"), &Fraction::INFINITY), fr("1/2"));
        assert_eq!(opposite_vertex(&Fraction::INFINITY, &fr("0/1"), &fr("1/1")), fr("-1/1"));
        assert!(ccw(&fr("0"), &fr("1"), &Fraction::INFINITY));
        assert!(ccw(&Fraction::INFINITY, &fr("-3"), &fr("0")));
        assert!(!ccw(&fr("1"), &fr("0"), &Fraction::INFINITY));
        assert!("1/2,1/3".parse::<FareyLeaf>().is_ok());
        assert!("0/1,2/1".parse::<FareyLeaf>().is_err());
    }

    #[test]
    fn base_point_must_avoid_leaves() {
        assert!(FareyLamination::new(HPoint::I).is_err());
        assert!(FareyLamination::new(HPoint { x: 0.5, y: 0.4 }).is_err());
        assert!(FareyLamination::new(HPoint { x: 0.5, y: 1.0 }).is_ok());
    }

    #[test]
    fn radius_zero_is_empty() {
        let lam = FareyLamination::default();
        assert!(lam.enumerate_triangles(0.0).is_empty());
    }

    #[test]
    fn standard_triangle_center() {
        // fixed point of z ↦ 1/(1 - z)
        let t = FareyTriangle {
            u: Fraction::ZERO,
            c: Fraction::ONE,
            w: Fraction::INFINITY,
            depth: 0,
        };
        let c = incenter(&t);
        assert_abs_diff_eq!(c.x, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(c.y, 0.75f64.sqrt(), epsilon = 1e-14);
        let z = c.to_complex();
        let img = 1.0 / (1.0 - z);
        assert_abs_diff_eq!((img - z).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn mediant_triangle_geometry() {
        let lam = FareyLamination::default();
        let t = lam.triangle(fr("0"), fr("1/2"), fr("1")).unwrap();
        assert_eq!(t.tri.u, fr("0"));
        assert_eq!(t.tri.w, fr("1"));
        assert_eq!(t.depth(), 1);
        // O lies straight above the center of g3 at height √3/2
        assert_abs_diff_eq!(t.d, 3f64.sqrt().ln(), epsilon = 1e-12);
        // apex 1/2 also projects to the top of the semicircle
        assert_abs_diff_eq!(t.u, 0.0, epsilon = 1e-12);

        let lam_i = FareyLamination::new(HPoint { x: 0.5, y: 1.0 }).unwrap();
        let t = lam_i.triangle(fr("0"), fr("1/2"), fr("1")).unwrap();
        assert_abs_diff_eq!(t.d, 2f64.ln(), epsilon = 1e-12);
        assert!(lam.triangle(fr("0"), fr("1"), Fraction::INFINITY).is_err());
        assert!(lam.triangle(fr("0"), fr("1/3"), fr("1")).is_err());
    }

    #[test]
    fn left_orientation_of_all_sides() {
        let lam = FareyLamination::default();
        for t in lam.enumerate_triangles(6.0) {
            for g in [t.g1, t.g2, t.g3] {
                let z = g.raw_normalizer().apply_point(&lam.base());
                assert!(z.x < 0.0, "base point not left of {:?}", g);
            }
        }
    }

    #[test]
    fn separation_examples() {
        let lam = FareyLamination::default();
        let t = lam.triangle(fr("0"), fr("1/2"), fr("1")).unwrap();
        let t2 = lam.triangle(fr("0"), fr("1/3"), fr("1/2")).unwrap();
        let across_axis = lam.triangle(fr("-1"), fr("0"), Fraction::INFINITY).unwrap();
        assert!(lam.separates(&t, &t2));
        assert!(!lam.separates(&t2, &t));
        assert!(!lam.separates(&t, &across_axis));
        assert!(!lam.separates(&across_axis, &t));
        assert!(!lam.separates(&t, &t));
    }

    #[test]
    fn small_family_is_root_children() {
        let lam = FareyLamination::default();
        let v = lam.enumerate_triangles(1.5);
        let fam = lam.spanning_family(1.5);
        if v.iter().all(|t| t.depth() == 1) {
            assert_eq!(fam.members.len(), v.len());
            assert!(fam.below.is_empty());
        }
        // the three children sit at the same distance by symmetry
        let kids = lam.enumerate_triangles(lam.triangle(fr("0"), fr("1/2"), fr("1")).unwrap().center_dist + 1e-9);
        assert_eq!(kids.len(), 3);
        let fam = lam.spanning_family(kids[0].center_dist + 1e-9);
        assert_eq!(fam.members.len(), 3);
    }

    #[test]
    fn csv_export() {
        let lam = FareyLamination::default();
        let mut buf = Vec::new();
        FareyLamination::write_csv(&lam.enumerate_triangles(3.0), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u,c,w,depth,d,u_t,center_dist"));
        assert!(text.lines().count() > 3);
    }
}

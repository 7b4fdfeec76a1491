//! Transverse cocycles on the Farey lamination, represented by per-leaf
//! weights. `α(T)` is the sum of the weights of the leaves crossed on the way
//! from `T_O` to `T`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::farey::{FareyLamination, FareyLeaf, FareyTriangle, Fraction, IdealTriangle, LeafRef};

/// Serializable description of a cocycle, as it appears in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CocycleSpec {
    Zero,
    Dirac { leaf: String },
    DepthDecay { base: f64, ratio: f64 },
    Seeded { seed: u64, bound: f64 },
    Constant { weight: f64 },
    Linear { terms: Vec<(f64, CocycleSpec)> },
}

impl CocycleSpec {
    pub fn build(&self) -> Result<TransverseCocycle> {
        match self {
            CocycleSpec::Zero => Ok(TransverseCocycle::zero()),
            CocycleSpec::Dirac { leaf } => Ok(TransverseCocycle::dirac(leaf.parse()?)),
            CocycleSpec::DepthDecay { base, ratio } => TransverseCocycle::depth_decay(*base, *ratio),
            CocycleSpec::Seeded { seed, bound } => TransverseCocycle::seeded_bounded(*seed, *bound),
            CocycleSpec::Constant { weight } => Ok(TransverseCocycle::constant(*weight)),
            CocycleSpec::Linear { terms } => {
                let mut acc = TransverseCocycle::zero();
                for (coef, spec) in terms {
                    acc = TransverseCocycle::linear(1.0, &acc, *coef, &spec.build()?);
                }
                Ok(acc)
            }
        }
    }
}

/// Shorthand used on the command line: `zero`, `dirac:0/1,1/1`,
/// `depth_decay:1,0.5`, `seeded:7,0.3`, `constant:1`.
impl FromStr for CocycleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = |n: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = args
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Domain(format!("bad cocycle arguments in `{s}`")))?;
            if v.len() != n {
                return domain(format!("cocycle `{kind}` takes {n} arguments"));
            }
            Ok(v)
        };
        match kind.trim() {
            "zero" => Ok(CocycleSpec::Zero),
            "dirac" => {
                args.parse::<FareyLeaf>()?;
                Ok(CocycleSpec::Dirac {
                    leaf: args.to_string(),
                })
            }
            "depth_decay" | "depth-decay" => {
                let v = nums(2)?;
                Ok(CocycleSpec::DepthDecay {
                    base: v[0],
                    ratio: v[1],
                })
            }
            "seeded" => {
                let v = nums(2)?;
                Ok(CocycleSpec::Seeded {
                    seed: v[0] as u64,
                    bound: v[1],
                })
            }
            "constant" => Ok(CocycleSpec::Constant { weight: nums(1)?[0] }),
            other => domain(format!("unknown cocycle kind `{other}`")),
        }
    }
}

type WeightFn = Arc<dyn Fn(&LeafRef) -> f64 + Send + Sync>;

/// A signed weight on every Farey leaf, bounded by `bound`.
#[derive(Clone)]
pub struct TransverseCocycle {
    weight: WeightFn,
    bound: f64,
    label: String,
}

impl fmt::Debug for TransverseCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransverseCocycle")
            .field("label", &self.label)
            .field("bound", &self.bound)
            .finish()
    }
}

impl TransverseCocycle {
    pub fn from_fn(
        label: impl Into<String>,
        bound: f64,
        weight: impl Fn(&LeafRef) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            weight: Arc::new(weight),
            bound,
            label: label.into(),
        }
    }

    pub fn zero() -> Self {
        Self::from_fn("zero", 0.0, |_| 0.0)
    }

    /// Unit weight on a single leaf.
    pub fn dirac(leaf: FareyLeaf) -> Self {
        Self::from_fn(format!("dirac:{leaf}"), 1.0, move |l| {
            if l.leaf == leaf {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn constant(w: f64) -> Self {
        Self::from_fn(format!("constant:{w}"), w.abs(), move |_| w)
    }

    /// `base · ratio^depth`.
    pub fn depth_decay(base: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) || !base.is_finite() {
            return domain(format!("depth_decay needs ratio in (0,1), got {ratio}"));
        }
        Ok(Self::from_fn(
            format!("depth_decay:{base},{ratio}"),
            base.abs(),
            move |l| base * ratio.powi(l.depth as i32),
        ))
    }

    /// Deterministic pseudo-random weights in `[-bound, bound]`, keyed by the
    /// leaf's vertex labels.
    pub fn seeded_bounded(seed: u64, bound: f64) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return domain(format!("seeded cocycle needs a positive bound, got {bound}"));
        }
        Ok(Self::from_fn(format!("seeded:{seed},{bound}"), bound, move |l| {
            let key = leaf_key(seed, &l.leaf);
            ChaCha8Rng::seed_from_u64(key).gen_range(-bound..=bound)
        }))
    }

    /// `a·x + b·y`.
    pub fn linear(a: f64, x: &TransverseCocycle, b: f64, y: &TransverseCocycle) -> Self {
        let (wx, wy) = (x.weight.clone(), y.weight.clone());
        Self::from_fn(
            format!("{a}*({})+{b}*({})", x.label, y.label),
            a.abs() * x.bound + b.abs() * y.bound,
            move |l| a * wx(l) + b * wy(l),
        )
    }

    /// `t · self`.
    pub fn scaled(&self, t: f64) -> Self {
        let w = self.weight.clone();
        Self::from_fn(format!("{t}*({})", self.label), t.abs() * self.bound, move |l| t * w(l))
    }

    pub fn weight(&self, leaf: &LeafRef) -> f64 {
        (self.weight)(leaf)
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `α(T)` for the triangle with these combinatorics.
    pub fn alpha(&self, lam: &FareyLamination, tri: &FareyTriangle) -> Result<f64> {
        let path = lam.path_to(tri.u, tri.c, tri.w)?;
        Ok(path.iter().fold(0.0, |acc, t| {
            acc + self.weight(&LeafRef {
                leaf: t.g3(),
                depth: t.depth - 1,
            })
        }))
    }

    /// `α` for every triangle of a list in which parents precede children.
    /// Uses the same summation order as [`alpha`](Self::alpha), so values
    /// agree bitwise.
    pub fn alpha_map(
        &self,
        lam: &FareyLamination,
        triangles: &[IdealTriangle],
    ) -> Result<HashMap<[Fraction; 3], f64>> {
        let mut out: HashMap<[Fraction; 3], f64> = HashMap::with_capacity(triangles.len());
        for t in triangles {
            let w = self.weight(&LeafRef {
                leaf: t.tri.g3(),
                depth: t.tri.depth - 1,
            });
            let value = if t.tri.depth == 1 {
                0.0 + w
            } else {
                match out.get(&t.tri.parent_key()) {
                    Some(parent) => parent + w,
                    None => self.alpha(lam, &t.tri)?,
                }
            };
            out.insert(t.tri.key(), value);
        }
        Ok(out)
    }
}

fn leaf_key(seed: u64, leaf: &FareyLeaf) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [leaf.a.p, leaf.a.q, leaf.b.p, leaf.b.q] {
        h = (h ^ v as u64).wrapping_mul(0x0000_0100_0000_01B3).rotate_left(29);
    }
    h
}

/// `α_t = t · σ̇`.
#[derive(Clone, Debug)]
pub struct CocyclePath {
    pub direction: TransverseCocycle,
    pub scale: f64,
}

impl CocyclePath {
    pub fn new(direction: TransverseCocycle, scale: f64) -> Self {
        Self { direction, scale }
    }

    pub fn alpha(&self, lam: &FareyLamination, tri: &FareyTriangle) -> Result<f64> {
        Ok(self.scale * self.direction.alpha(lam, tri)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlphaRow {
    pub triangle: String,
    pub alpha: f64,
    pub depth: u32,
    pub d: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlphaGrowthReport {
    pub rows: Vec<AlphaRow>,
    /// Least-squares slope of `|α(T)|` against tree depth.
    pub slope: f64,
    /// `max |α(T)| / (1 + depth)`.
    pub max_ratio: f64,
    pub bound: f64,
    pub linear_growth: bool,
}

/// Linear-growth diagnostic for `α` over the triangles within `radius`.
pub fn alpha_growth_report(
    lam: &FareyLamination,
    c: &TransverseCocycle,
    radius: f64,
) -> Result<AlphaGrowthReport> {
    let tris = lam.enumerate_triangles(radius);
    let alphas = c.alpha_map(lam, &tris)?;
    let rows: Vec<AlphaRow> = tris
        .iter()
        .map(|t| AlphaRow {
            triangle: t.tri.to_string(),
            alpha: alphas[&t.tri.key()],
            depth: t.depth(),
            d: t.d,
        })
        .collect();
    let n = rows.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let mut max_ratio: f64 = 0.0;
    for r in &rows {
        let (x, y) = (r.depth as f64, r.alpha.abs());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        max_ratio = max_ratio.max(y / (1.0 + x));
    }
    let denom = n * sxx - sx * sx;
    let slope = if denom.abs() > 0.0 { (n * sxy - sx * sy) / denom } else { 0.0 };
    Ok(AlphaGrowthReport {
        rows,
        slope,
        max_ratio,
        bound: c.bound(),
        linear_growth: max_ratio <= c.bound() * (1.0 + 1e-12),
    })
}

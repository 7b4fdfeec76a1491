//! The tangent series `Σ_T σ̇(T) C₀(φ, T)`, its truncations over the
//! triangles near the base point, boundary terms over spanning families,
//! and comparisons with finite differences of pullback integrals.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::TransverseCocycle;
use crate::earthquake::EarthquakeMap;
use crate::error::{domain, Error, Result};
use crate::farey::{FareyLamination, Fraction, IdealTriangle, SpanningFamily};
use crate::liouville::{
    kernel_geodesic, kernel_integral, FD_GRID, kernel_triangle, pullback_integral_at_level, triangle_kernel, CosineKernel,
    TestFunction,
};
use crate::quadrature::{fd_derivative_refined, pairwise_sum, FdReport, QuadratureSpec};

/// Relative gaps are measured against `max(|reference|, AGREEMENT_FLOOR)`.
pub const AGREEMENT_FLOOR: f64 = 1e-12;


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub triangle: String,
    pub depth: u32,
    pub d: f64,
    pub abs_u: f64,
    pub sigma: f64,
    pub kernel: f64,
    /// `|C₀(φ,T)| e^{(1+ν)D + |u|} / ‖φ‖_ν`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub test_function: String,
    pub cocycle: String,
    /// `(n, S_n)`, increasing in `n`.
    pub partial_sums: Vec<(f64, f64)>,
    /// `(n, B_n)`.
    pub boundary_terms: Vec<(f64, f64)>,
    /// `(n, tail bound)` wherever the geometry reaches far enough.
    pub tail_bounds: Vec<(f64, f64)>,
    /// Tail bound at the second-largest `n` of the ladder.
    pub tail_bound: f64,
    /// Safety factor times the largest decay ratio on the outermost shell.
    pub empirical_constant: f64,
    pub extrapolation: f64,
    pub series_value: f64,
    /// Interior sum `Σ_{T<𝒰} σ̇(T) C₀(φ,T)` for finite-truncation checks.
    pub interior_value: Option<f64>,
    pub fd_value: Option<f64>,
    pub fd_error: Option<f64>,
    pub fd_warning: Option<String>,
    pub fd_level: Option<usize>,
    /// Relative gap of the primary comparison.
    pub agreement: Option<f64>,
    /// Relative gap of the finite identity `FD = interior + B`.
    pub identity_gap: Option<f64>,
    pub decay_table: Vec<DecayRow>,
}

impl DerivativeReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn write_decay_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.decay_table {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_partial_sums_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "partial_sum", "tail_bound", "boundary_term"])?;
        let lookup = |v: &[(f64, f64)], n: f64| {
            v.iter()
                .find(|(m, _)| *m == n)
                .map_or(String::new(), |(_, x)| format!("{x:.15e}"))
        };
        for (n, s) in &self.partial_sums {
            w.write_record([
                n.to_string(),
                format!("{s:.15e}"),
                lookup(&self.tail_bounds, *n),
                lookup(&self.boundary_terms, *n),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn rel_gap(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(AGREEMENT_FLOOR)
}

/// `e^{−(1+ν)D − |u|}`.
fn decay_weight(t: &IdealTriangle, nu: f64) -> f64 {
    (-(1.0 + nu) * t.d - t.u.abs()).exp()
}

/// `C₀(φ, T)` for every triangle, computed in parallel.
pub fn triangle_kernels(phi: &TestFunction, tris: &[IdealTriangle], q: &QuadratureSpec) -> Result<Vec<f64>> {
    tris.par_iter()
        .map(|t| kernel_triangle(phi, t, q).map(|r| r.value))
        .collect()
}

/// Decay rows for a list of triangles with known kernels and cocycle values.
pub fn decay_table(phi: &TestFunction, tris: &[IdealTriangle], kernels: &[f64], sigma: &[f64]) -> Vec<DecayRow> {
    let norm = phi.holder_norm_bound();
    let nu = phi.holder_exponent();
    tris.iter()
        .zip(kernels)
        .zip(sigma)
        .map(|((t, &k), &s)| DecayRow {
            triangle: t.tri.to_string(),
            depth: t.depth(),
            d: t.d,
            abs_u: t.u.abs(),
            sigma: s,
            kernel: k,
            ratio: k.abs() / (norm * decay_weight(t, nu)),
        })
        .collect()
}

/// Inputs shared by the series computations.
#[derive(Clone, Copy)]
pub struct SeriesInput<'a> {
    pub lam: &'a FareyLamination,
    pub phi: &'a TestFunction,
    pub sigma: &'a TransverseCocycle,
    pub quadrature: QuadratureSpec,
}

/// `S_n` for `n = n_max, n_max − 2, …` down to 2, with tail bounds and
/// geometric extrapolation. Partial sums that fail the Cauchy test against
/// the tail bound beyond `n = 6` raise [`Error::Numeric`].
pub fn tangent_series_value(input: &SeriesInput, n_max: f64) -> Result<DerivativeReport> {
    let SeriesInput { lam, phi, sigma, quadrature } = input;
    if !(n_max >= 2.0) {
        return domain(format!("series truncation n = {n_max} must be at least 2"));
    }
    let geometry = lam.enumerate_triangles(n_max + 2.0);
    let tris: Vec<IdealTriangle> = geometry.iter().filter(|t| t.center_dist <= n_max).copied().collect();
    let kernels = triangle_kernels(phi, &tris, quadrature)?;
    let alpha = sigma.alpha_map(lam, &tris)?;
    let sig: Vec<f64> = tris.iter().map(|t| alpha[&t.tri.key()]).collect();
    let terms: Vec<f64> = sig.iter().zip(&kernels).map(|(s, k)| s * k).collect();

    let mut ladder: Vec<f64> = Vec::new();
    let mut n = n_max;
    while n >= 2.0 - 1e-12 {
        ladder.push(n);
        n -= 2.0;
    }
    ladder.reverse();
    let partial_sums: Vec<(f64, f64)> = ladder
        .iter()
        .map(|&n| {
            let sel: Vec<f64> = tris
                .iter()
                .zip(&terms)
                .filter(|(t, _)| t.center_dist <= n)
                .map(|(_, x)| *x)
                .collect();
            (n, pairwise_sum(&sel))
        })
        .collect();

    let table = decay_table(phi, &tris, &kernels, &sig);
    // empirical constant from the outermost computed shell
    let shell_max = table
        .iter()
        .zip(&tris)
        .filter(|(_, t)| t.center_dist > n_max - 2.0)
        .map(|(r, _)| r.ratio)
        .fold(0.0, f64::max);
    let empirical_constant = 4.0 * shell_max;
    let norm = phi.holder_norm_bound();
    let nu = phi.holder_exponent();
    let bound = sigma.bound();
    let shell = |lo: f64, hi: f64| -> f64 {
        let w: Vec<f64> = geometry
            .iter()
            .filter(|t| t.center_dist > lo && t.center_dist <= hi)
            .map(|t| bound * (1.0 + t.depth() as f64) * norm * decay_weight(t, nu))
            .collect();
        pairwise_sum(&w)
    };
    let abs_terms: f64 = terms.iter().map(|x| x.abs()).sum();
    let mut tail_bounds = Vec::new();
    for &n in &ladder {
        if n + 2.0 > n_max + 2.0 + 1e-12 {
            continue;
        }
        let s1 = shell(n, n + 2.0);
        let s2 = if n + 4.0 <= n_max + 2.0 + 1e-12 { shell(n + 2.0, n + 4.0) } else { 0.0 };
        let r = if s1 > 0.0 { s2 / s1 } else { 0.0 };
        let rest = if r > 0.0 && r < 1.0 { s2 * r / (1.0 - r) } else { 0.0 };
        let tail = empirical_constant * (s1 + s2 + rest) + 64.0 * f64::EPSILON * abs_terms;
        tail_bounds.push((n, tail));
    }
    let tail_at = |n: f64| tail_bounds.iter().find(|(m, _)| (*m - n).abs() < 1e-12).map(|x| x.1);

    for w in partial_sums.windows(2) {
        let ((n0, s0), (_, s1)) = (w[0], w[1]);
        if n0 >= 6.0 - 1e-12 {
            if let Some(tb) = tail_at(n0) {
                if (s1 - s0).abs() > tb {
                    return Err(Error::Numeric(format!(
                        "partial sums not Cauchy: |S_{} − S_{n0}| = {:e} exceeds tail bound {tb:e}; table {partial_sums:?}",
                        n0 + 2.0,
                        (s1 - s0).abs()
                    )));
                }
            }
        }
    }

    let k = partial_sums.len();
    let extrapolation = if k >= 3 {
        let d1 = partial_sums[k - 2].1 - partial_sums[k - 3].1;
        let d2 = partial_sums[k - 1].1 - partial_sums[k - 2].1;
        let q = if d1 != 0.0 { d2 / d1 } else { 0.0 };
        if q > 0.0 && q < 1.0 {
            d2 * q / (1.0 - q)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let last = partial_sums.last().map_or(0.0, |x| x.1);
    let tail_bound = if k >= 2 { tail_at(partial_sums[k - 2].0).unwrap_or(f64::NAN) } else { f64::NAN };
    Ok(DerivativeReport {
        test_function: phi.name().to_string(),
        cocycle: sigma.label().to_string(),
        partial_sums,
        tail_bounds,
        tail_bound,
        empirical_constant,
        extrapolation,
        series_value: last + extrapolation,
        decay_table: table,
        ..Default::default()
    })
}

/// `B = Σ_{U∈𝒰} σ̇(U) C₀(φ, g₃^U)`.
pub fn boundary_term(input: &SeriesInput, family: &SpanningFamily) -> Result<f64> {
    let SeriesInput { lam, phi, sigma, quadrature } = input;
    let terms: Vec<f64> = family
        .members
        .par_iter()
        .map(|u| -> Result<f64> {
            let s = sigma.alpha(lam, &u.tri)?;
            if s == 0.0 {
                return Ok(0.0);
            }
            Ok(s * kernel_geodesic(phi, &u.g3, quadrature)?.value)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms))
}

/// `B_n` over `𝒰_n` for each `n`.
pub fn boundary_scan(input: &SeriesInput, ns: &[f64]) -> Result<Vec<(f64, f64)>> {
    ns.iter()
        .map(|&n| Ok((n, boundary_term(input, &input.lam.spanning_family(n))?)))
        .collect()
}

/// Least-squares slope of `ln |B_n|` against `n`.
pub fn log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, b)| (n, b.abs().ln())).collect();
    let k = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / k, sy / k);
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// Finite differences of `t ↦ ∬ φ ∘ (E_𝒰^{t σ̇})⁻¹ dL` at `t0`, with the
/// quadrature level raised until successive derivative estimates agree.
pub fn fd_truncated_pullback(
    input: &SeriesInput,
    family: &SpanningFamily,
    t0: f64,
    steps: &[f64],
) -> Result<(FdReport, usize)> {
    let f = |level: usize, t: f64| {
        let e = EarthquakeMap::truncated_shear(input.lam, &input.sigma.scaled(t), family)?;
        pullback_integral_at_level(input.phi, &e, FD_GRID, level)
    };
    fd_derivative_refined(f, t0, steps, input.quadrature.max_levels)
}

type KernelsByVertices = HashMap<[Fraction; 3], f64>;

fn interior_terms(input: &SeriesInput, family: &SpanningFamily) -> Result<(Vec<f64>, KernelsByVertices)> {
    let all: Vec<IdealTriangle> = family.below.iter().chain(&family.members).copied().collect();
    let alpha = input.sigma.alpha_map(input.lam, &all)?;
    let kernels = triangle_kernels(input.phi, &family.below, &input.quadrature)?;
    let terms = family
        .below
        .iter()
        .zip(&kernels)
        .map(|(t, k)| alpha[&t.tri.key()] * k)
        .collect();
    Ok((terms, alpha))
}

/// The exact identity at finite truncation: the derivative at `t = 0` of
/// the truncated pullback equals the interior sum plus the boundary term.
pub fn verify_finite_truncation(
    input: &SeriesInput,
    family: &SpanningFamily,
    steps: &[f64],
) -> Result<DerivativeReport> {
    let (terms, _) = interior_terms(input, family)?;
    let interior = pairwise_sum(&terms);
    let b = boundary_term(input, family)?;
    let (fd, level) = fd_truncated_pullback(input, family, 0.0, steps)?;
    let gap = rel_gap(interior + b, fd.value);
    Ok(DerivativeReport {
        test_function: input.phi.name().to_string(),
        cocycle: input.sigma.label().to_string(),
        boundary_terms: vec![(family.radius, b)],
        series_value: interior + b,
        interior_value: Some(interior),
        fd_value: Some(fd.value),
        fd_error: Some(fd.error_estimate),
        fd_warning: fd.warning,
        fd_level: Some(level),
        agreement: Some(gap),
        identity_gap: Some(gap),
        ..Default::default()
    })
}

/// Finite differences of the `𝒰_n`-truncated pullback against `S_n + B_n`,
/// together with the finite identity and the boundary term. The
/// extrapolated tail is reported but kept out of the comparison, since the
/// truncated pullback has no tail.
pub fn verify_main_theorem(input: &SeriesInput, n: f64, steps: &[f64]) -> Result<DerivativeReport> {
    if n < 4.0 {
        return domain(format!("main-theorem check needs n ≥ 4, got {n}"));
    }
    let mut report = tangent_series_value(input, n)?;
    let family = input.lam.spanning_family(n);
    let (terms, _) = interior_terms(input, &family)?;
    let interior = pairwise_sum(&terms);
    let b = boundary_term(input, &family)?;
    let (fd, level) = fd_truncated_pullback(input, &family, 0.0, steps)?;
    let s_n = report.partial_sums.last().map_or(0.0, |x| x.1);
    report.boundary_terms = vec![(n, b)];
    report.interior_value = Some(interior);
    report.fd_value = Some(fd.value);
    report.fd_error = Some(fd.error_estimate);
    report.fd_warning = fd.warning;
    report.fd_level = Some(level);
    report.agreement = Some(rel_gap(s_n + b, fd.value));
    report.identity_gap = Some(rel_gap(interior + b, fd.value));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub t0: f64,
    pub fd_value: f64,
    pub fd_error: f64,
    /// Series with kernels taken in the metric deformed to `t0`.
    pub deformed_series: f64,
    /// The undeformed series at `t = 0`, for comparison.
    pub series_at_zero: f64,
    pub agreement: f64,
}

/// Derivative of the truncated pullback at `t0 ≠ 0`: finite differences
/// against the series whose kernels are taken after the deformation by
/// `E_𝒰^{t0 σ̇}`.
pub fn t_uniformity_check(input: &SeriesInput, family: &SpanningFamily, t0: f64, steps: &[f64]) -> Result<UniformityReport> {
    let SeriesInput { lam, phi, sigma, quadrature } = input;
    let e = EarthquakeMap::truncated_shear(lam, &sigma.scaled(t0), family)?;
    let all: Vec<IdealTriangle> = family.below.iter().chain(&family.members).copied().collect();
    let alpha = sigma.alpha_map(lam, &all)?;
    let chart = phi.chart();
    let interior: Vec<f64> = family
        .below
        .par_iter()
        .map(|t| {
            let k = triangle_kernel(chart, t, Some(&e));
            Ok(alpha[&t.tri.key()] * kernel_integral(phi, &k, Some(&e), quadrature)?.value)
        })
        .collect::<Result<_>>()?;
    let boundary: Vec<f64> = family
        .members
        .par_iter()
        .map(|u| {
            let s = alpha[&u.tri.key()];
            if s == 0.0 {
                return Ok(0.0);
            }
            let k = CosineKernel::new(chart, &[(u.g3, 1.0)], Some(&e));
            Ok(s * kernel_integral(phi, &k, Some(&e), quadrature)?.value)
        })
        .collect::<Result<_>>()?;
    let deformed = pairwise_sum(&interior) + pairwise_sum(&boundary);
    let (fd, _) = fd_truncated_pullback(input, family, t0, steps)?;
    let (terms, _) = interior_terms(input, family)?;
    let at_zero = pairwise_sum(&terms) + boundary_term(input, family)?;
    Ok(UniformityReport {
        t0,
        fd_value: fd.value,
        fd_error: fd.error_estimate,
        deformed_series: deformed,
        series_at_zero: at_zero,
        agreement: rel_gap(deformed, fd.value),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub epsilon: f64,
    pub base_value: f64,
    pub moved_value: f64,
    /// `|S(O′) − S(O)| / d(O, O′)`.
    pub lipschitz_ratio: f64,
}

/// Moves the base point by hyperbolic distance `eps` (along the imaginary
/// direction) and recomputes the truncated series for the same function on
/// geodesics.
pub fn base_point_continuity(input: &SeriesInput, n: f64, eps: f64) -> Result<ContinuityReport> {
    let base = input.lam.base();
    let moved = crate::hyperbolic::HPoint::new(base.x, base.y * eps.exp())?;
    let lam2 = FareyLamination::new(moved)?;
    let phi2 = input.phi.in_chart(*lam2.chart())?;
    let input2 = SeriesInput {
        lam: &lam2,
        phi: &phi2,
        sigma: input.sigma,
        quadrature: input.quadrature,
    };
    let a = tangent_series_value(input, n)?;
    let b = tangent_series_value(&input2, n)?;
    let (va, vb) = (
        a.partial_sums.last().map_or(0.0, |x| x.1),
        b.partial_sums.last().map_or(0.0, |x| x.1),
    );
    Ok(ContinuityReport {
        epsilon: eps,
        base_value: va,
        moved_value: vb,
        lipschitz_ratio: (va - vb).abs() / base.dist(&moved),
    })
}

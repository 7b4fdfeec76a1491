//! Command-line runs: a [`RunConfig`] (JSON file and/or flags) goes in, a
//! JSON report plus CSV tables and a gnuplot script come out.
//!
//! Exit codes: 0 when every check passes, 2 when a tolerance check fails or
//! a numerical method gives up (reports are still written), 1 for usage and
//! configuration errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cocycle::{CocycleSpec, TransverseCocycle};
use crate::error::{Error, Result};
use crate::farey::{FareyLamination, Fraction, IdealTriangle};
use crate::hyperbolic::{Geodesic, MobiusMap};
use crate::liouville::{
    builtin_by_name, check_kernel_geodesic, CROSSING_MASS_TOL, check_kernel_triangle, crossing_mass, liouville_integral,
    triangles_meeting_support, TestFunction,
};
use crate::quadrature::{QuadratureSpec, DEFAULT_FD_STEPS};
use crate::series::{
    base_point_continuity, boundary_scan, decay_table, log_slope, t_uniformity_check, tangent_series_value,
    triangle_kernels, verify_finite_truncation, verify_main_theorem, SeriesInput,
};

/// Name of the crossing-mass family in `test_function`.
pub const CROSSING_MASS: &str = "crossing-mass";
/// `½ log 3 + log 2`, the slack between `d(O, O_T)` and `D_T + |u_T|`.
pub const ESTO_BOUND: f64 = 1.242_453_324_894_000_2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Integrate,
    Kernel,
    Series,
    VerifyLemma,
    VerifyTheorem,
    DecayScan,
    BoundaryScan,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Integrate => "integrate",
            Command::Kernel => "kernel",
            Command::Series => "series",
            Command::VerifyLemma => "verify-lemma",
            Command::VerifyTheorem => "verify-theorem",
            Command::DecayScan => "decay-scan",
            Command::BoundaryScan => "boundary-scan",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// Geodesic kernels against the elementary-earthquake derivative.
    Elemshear,
    /// Triangle kernels against the triangle-factor derivative.
    Defct,
    /// Interior series plus boundary term against the truncated shear.
    Dercomshear,
    /// `|d(O, O_T) − D_T − |u_T|| ≤ ½ log 3 + log 2`.
    #[value(name = "esto_t", alias = "esto-t")]
    EstoT,
}

/// A cocycle in a config file: either the command-line shorthand or the
/// tagged object form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CocycleArg {
    Short(String),
    Full(CocycleSpec),
}

impl CocycleArg {
    pub fn spec(&self) -> Result<CocycleSpec> {
        match self {
            CocycleArg::Short(s) => CocycleSpec::from_str(s),
            CocycleArg::Full(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// A builtin name or `crossing-mass`.
    pub test_function: String,
    pub cocycle: CocycleArg,
    /// Truncation radius (`enumerate`, `𝒰_n`, series ladder).
    pub n: f64,
    /// Radii for `boundary-scan`.
    pub ns: Vec<f64>,
    /// Crossing-mass segment length.
    pub ell: f64,
    /// Crossing-mass mollification width.
    pub mollifier: f64,
    /// Crossing-mass staircase resolution.
    pub pieces: usize,
    pub lemma: Option<Lemma>,
    /// Oriented geodesic `p/q,r/s` for `kernel` and `verify-lemma`.
    pub leaf: Option<String>,
    /// Farey triangle `u,c,w` for `kernel` and `verify-lemma`.
    pub triangle: Option<String>,
    /// Base of the t-uniformity check in `verify-theorem`; skipped if absent.
    pub t0: Option<f64>,
    /// Base-point displacement for the continuity report.
    pub continuity_eps: f64,
    pub quadrature: QuadratureSpec,
    pub fd_steps: Vec<f64>,
    /// Output directory.
    pub output_path: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Integrate,
            test_function: "holder-0.5-balanced".into(),
            cocycle: CocycleArg::Short("depth_decay:1,0.5".into()),
            n: 8.0,
            ns: vec![4.0, 6.0, 8.0],
            ell: 1.0,
            mollifier: 0.05,
            pieces: 48,
            lemma: None,
            leaf: None,
            triangle: None,
            t0: None,
            continuity_eps: 0.01,
            quadrature: QuadratureSpec::default(),
            fd_steps: DEFAULT_FD_STEPS.to_vec(),
            output_path: PathBuf::from("liouville-out"),
            seed: 0,
        }
    }
}

fn config_err<T>(field: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        field: field.into(),
        message: message.into(),
    })
}

fn relabel<T>(field: &str, r: Result<T>) -> Result<T> {
    r.or_else(|e| match e {
        Error::Config { .. } => Err(e),
        other => config_err(field, other.to_string()),
    })
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).or_else(|e| config_err("config", e.to_string()))
    }

    /// Checks every field; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if !(self.n.is_finite() && self.n >= 2.0) {
            return config_err("n", format!("must be a finite radius ≥ 2, got {}", self.n));
        }
        if self.ns.is_empty() || self.ns.iter().any(|n| !(n.is_finite() && *n >= 2.0)) {
            return config_err("ns", "need at least one finite radius ≥ 2");
        }
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return config_err("ell", format!("must be positive, got {}", self.ell));
        }
        if !(self.mollifier > 0.0 && self.mollifier < 1.0) {
            return config_err("mollifier", format!("must lie in (0, 1), got {}", self.mollifier));
        }
        if self.pieces == 0 {
            return config_err("pieces", "must be at least 1");
        }
        if !(self.continuity_eps > 0.0 && self.continuity_eps.is_finite()) {
            return config_err("continuity_eps", "must be positive");
        }
        if let Some(t0) = self.t0 {
            if !t0.is_finite() {
                return config_err("t0", "must be finite");
            }
        }
        if self.fd_steps.is_empty() || self.fd_steps.iter().any(|h| !(*h > 0.0)) {
            return config_err("fd_steps", "need at least one positive step");
        }
        self.quadrature.validate()?;
        relabel("cocycle", self.cocycle.spec().and_then(|s| s.build()))?;
        let lam = FareyLamination::default();
        relabel("test_function", self.test_function(&lam))?;
        if let Some(leaf) = &self.leaf {
            relabel("leaf", parse_geodesic(leaf))?;
        }
        if let Some(tri) = &self.triangle {
            relabel("triangle", parse_triangle(&lam, tri))?;
        }
        if self.command == Command::VerifyLemma && self.lemma.is_none() {
            return config_err("lemma", "verify-lemma needs one of elemshear, defct, dercomshear, esto_t");
        }
        Ok(())
    }

    pub fn test_function(&self, lam: &FareyLamination) -> Result<TestFunction> {
        if self.test_function == CROSSING_MASS {
            crossing_mass(*lam.chart(), self.ell, self.mollifier, self.pieces)
        } else {
            builtin_by_name(lam, &self.test_function)
        }
    }

    pub fn cocycle(&self) -> Result<TransverseCocycle> {
        self.cocycle.spec()?.build()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }
}

/// `p/q,r/s` as the geodesic from `p/q` to `r/s`.
pub fn parse_geodesic(s: &str) -> Result<Geodesic> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::Domain(format!("geodesic `{s}` must be `p/q,r/s`")))?;
    let (a, b): (Fraction, Fraction) = (a.trim().parse()?, b.trim().parse()?);
    Geodesic::new(a.to_boundary(), b.to_boundary())
}

/// `u,c,w` as a Farey triangle.
pub fn parse_triangle(lam: &FareyLamination, s: &str) -> Result<IdealTriangle> {
    let v: Vec<&str> = s.split(',').collect();
    if v.len() != 3 {
        return Err(Error::Domain(format!("triangle `{s}` must be `u,c,w`")));
    }
    lam.triangle(v[0].trim().parse()?, v[1].trim().parse()?, v[2].trim().parse()?)
}

/// One tolerance check in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured ≤ bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            passed: measured <= bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub result: Value,
}

/// Tabular artifacts of a run, written next to `report.json`.
#[derive(Default)]
struct Artifacts {
    csv: Vec<(String, Vec<String>, Vec<Vec<String>>)>,
    plot: Option<String>,
}

impl Artifacts {
    fn table(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) {
        self.csv
            .push((name.to_string(), header.iter().map(|s| s.to_string()).collect(), rows));
    }
}

fn num(x: f64) -> String {
    format!("{x:.15e}")
}

struct Outcome {
    checks: Vec<Check>,
    result: Value,
    artifacts: Artifacts,
}

/// Runs a validated config and writes its artifacts. Numerical failures
/// produce a failed report rather than an error.
pub fn run(config: &RunConfig) -> Result<Report> {
    config.validate()?;
    fs::create_dir_all(&config.output_path).or_else(|e| config_err("output_path", e.to_string()))?;
    let (checks, result, error, artifacts) = match dispatch(config) {
        Ok(o) => (o.checks, o.result, None, o.artifacts),
        Err(e @ (Error::Numeric(_) | Error::NonConvergence { .. })) => {
            (vec![], Value::Null, Some(e.to_string()), Artifacts::default())
        }
        Err(e) => return Err(e),
    };
    let report = Report {
        command: config.command.name().into(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config_hash: config.hash(),
        config: config.clone(),
        passed: error.is_none() && checks.iter().all(|c| c.passed),
        checks,
        error,
        result,
    };
    let dir = &config.output_path;
    let mut out = BufWriter::new(File::create(dir.join("report.json"))?);
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    for (name, header, rows) in &artifacts.csv {
        let mut w = csv::Writer::from_path(dir.join(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    if let Some(script) = &artifacts.plot {
        fs::write(dir.join("plot.gp"), script)?;
    }
    Ok(report)
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome> {
    let lam = FareyLamination::default();
    match cfg.command {
        Command::Integrate => run_integrate(cfg, &lam),
        Command::Kernel => run_kernel(cfg, &lam),
        Command::Series => run_series(cfg, &lam),
        Command::VerifyLemma => match cfg.lemma.expect("validated") {
            Lemma::Elemshear => run_elemshear(cfg, &lam),
            Lemma::Defct => run_defct(cfg, &lam),
            Lemma::Dercomshear => run_dercomshear(cfg, &lam),
            Lemma::EstoT => run_esto(cfg, &lam),
        },
        Command::VerifyTheorem => run_theorem(cfg, &lam),
        Command::DecayScan => run_decay_scan(cfg, &lam),
        Command::BoundaryScan => run_boundary_scan(cfg, &lam),
    }
}

/// Relative gap of `∬ φ∘M⁻¹ dL` from `∬ φ dL` for `count` random maps.
pub fn mobius_invariance_gaps(phi: &TestFunction, q: &QuadratureSpec, seed: u64, count: usize) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = liouville_integral(phi, q)?.value;
    (0..count)
        .map(|_| {
            let m = MobiusMap::random_near_identity(&mut rng, 0.3);
            let moved = liouville_integral(&phi.transformed(&m)?, q)?.value;
            Ok((moved - base).abs() / base.abs().max(1e-300))
        })
        .collect()
}

fn run_integrate(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let phi = cfg.test_function(lam)?;
    let mut q = cfg.quadrature;
    if cfg.test_function == CROSSING_MASS {
        q.refinement_tol = q.refinement_tol.max(CROSSING_MASS_TOL);
    }
    let report = liouville_integral(&phi, &q)?;
    let mut checks = vec![];
    let mut result = json!({ "test_function": phi.name(), "support_radius": phi.support_radius(), "quadrature": report });
    if cfg.test_function == CROSSING_MASS {
        let exact = 4.0 * cfg.ell;
        let gap = (report.value - exact).abs() / exact;
        result["closed_form"] = json!(exact);
        checks.push(Check::at_most("crossing_mass_closed_form", gap, 1e-4));
    } else {
        let gaps = mobius_invariance_gaps(&phi, &cfg.quadrature, cfg.seed, 3)?;
        checks.push(Check::at_most("mobius_invariance", gaps.iter().copied().fold(0.0, f64::max), 1e-6));
        result["mobius_gaps"] = json!(gaps);
    }
    Ok(Outcome {
        checks,
        result,
        artifacts: Artifacts::default(),
    })
}

fn run_kernel(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let phi = cfg.test_function(lam)?;
    let q = &cfg.quadrature;
    let check = match (&cfg.leaf, &cfg.triangle) {
        (Some(leaf), _) => check_kernel_geodesic(&phi, &parse_geodesic(leaf)?, q, &cfg.fd_steps)?,
        (None, Some(tri)) => check_kernel_triangle(lam, &phi, &parse_triangle(lam, tri)?, q, &cfg.fd_steps)?,
        (None, None) => return config_err("leaf", "kernel needs `leaf` or `triangle`"),
    };
    Ok(Outcome {
        checks: vec![Check::at_most(format!("kernel_vs_fd {}", check.label), check.agreement, 1e-4)],
        result: json!(check),
        artifacts: Artifacts::default(),
    })
}

/// The oriented side `g₃` of the triangle lying behind a Farey leaf.
pub fn leaf_geodesic(lam: &FareyLamination, leaf: &crate::farey::FareyLeaf, radius: f64) -> Option<Geodesic> {
    lam.enumerate_triangles(radius)
        .into_iter()
        .find(|t| t.tri.g3() == *leaf)
        .map(|t| t.g3)
}

fn partial_sum_rows(r: &crate::series::DerivativeReport) -> Vec<Vec<String>> {
    let lookup = |v: &[(f64, f64)], n: f64| v.iter().find(|(m, _)| *m == n).map_or(String::new(), |x| num(x.1));
    r.partial_sums
        .iter()
        .map(|&(n, s)| vec![n.to_string(), num(s), lookup(&r.tail_bounds, n), lookup(&r.boundary_terms, n)])
        .collect()
}

fn decay_rows(r: &[crate::series::DecayRow]) -> Vec<Vec<String>> {
    r.iter()
        .map(|d| {
            vec![
                d.triangle.clone(),
                d.depth.to_string(),
                num(d.d),
                num(d.abs_u),
                num(d.sigma),
                num(d.kernel),
                num(d.ratio),
            ]
        })
        .collect()
}

const DECAY_HEADER: [&str; 7] = ["triangle", "depth", "d", "abs_u", "sigma", "kernel", "ratio"];
const SUMS_HEADER: [&str; 4] = ["n", "partial_sum", "tail_bound", "boundary_term"];

const SERIES_PLOT: &str = "set datafile separator ','
set key autotitle columnhead
set multiplot layout 1,2
set xlabel 'n'
plot 'partial_sums.csv' using 1:2 with linespoints title 'S_n'
set logscale y
set xlabel 'D_T'
plot 'decay.csv' using 3:7 with points pt 7 ps 0.4 title 'decay ratio'
unset multiplot
";

fn run_series(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let phi = cfg.test_function(lam)?;
    let sigma = cfg.cocycle()?;
    let input = SeriesInput {
        lam,
        phi: &phi,
        sigma: &sigma,
        quadrature: cfg.quadrature,
    };
    let report = tangent_series_value(&input, cfg.n)?;
    let mut checks = vec![];
    let k = report.partial_sums.len();
    if k >= 2 {
        let step = (report.partial_sums[k - 1].1 - report.partial_sums[k - 2].1).abs();
        checks.push(Check::at_most("cauchy_tail", step, report.tail_bound));
    }
    let mut result = json!(report);
    if let CocycleSpec::Dirac { leaf } = cfg.cocycle.spec()? {
        let leaf = leaf.parse()?;
        if let Some(g) = leaf_geodesic(lam, &leaf, cfg.n) {
            let target = crate::liouville::kernel_geodesic(&phi, &g, &cfg.quadrature)?.value;
            let last = report.partial_sums[k - 1].1;
            let gap = (last - target).abs() / target.abs().max(1e-12);
            result["telescoping_target"] = json!(target);
            checks.push(Check::at_most("dirac_telescoping", gap, 1e-3));
        }
    }
    let mut artifacts = Artifacts::default();
    artifacts.table("partial_sums.csv", &SUMS_HEADER, partial_sum_rows(&report));
    artifacts.table("decay.csv", &DECAY_HEADER, decay_rows(&report.decay_table));
    artifacts.plot = Some(SERIES_PLOT.into());
    Ok(Outcome {
        checks,
        result,
        artifacts,
    })
}

/// The three geodesics of the kernel check: `g₃` and `g₂` of `(0, 1/2, 1)`
/// and `g₃` reversed.
pub fn elemshear_geodesics(lam: &FareyLamination) -> Result<Vec<Geodesic>> {
    let t = lam.triangle(Fraction::new(0, 1)?, Fraction::new(1, 2)?, Fraction::new(1, 1)?)?;
    Ok(vec![t.g3, t.g2, t.g3.reversed()])
}

/// Five triangles with nonzero kernel whose `D_T` spreads over `[0.8, 6]`.
pub fn defct_triangles(lam: &FareyLamination, phi: &TestFunction) -> Result<Vec<IdealTriangle>> {
    let (lo, hi) = (0.8, 6.0);
    let mut meet: Vec<IdealTriangle> = triangles_meeting_support(phi, &lam.enumerate_triangles(hi + 3.0))
        .into_iter()
        .filter(|t| t.d >= lo && t.d <= hi)
        .collect();
    meet.sort_by(|a, b| a.d.total_cmp(&b.d).then_with(|| a.tri.key().cmp(&b.tri.key())));
    if meet.len() < 5 {
        return Err(Error::Domain(format!(
            "only {} triangles with D in [{lo}, {hi}] meet the support",
            meet.len()
        )));
    }
    let (dmin, dmax) = (meet[0].d, meet[meet.len() - 1].d);
    let mut picked: Vec<IdealTriangle> = Vec::new();
    for i in 0..5 {
        let target = dmin + (dmax - dmin) * i as f64 / 4.0;
        let t = meet
            .iter()
            .filter(|t| !picked.iter().any(|p| p.tri == t.tri))
            .min_by(|a, b| (a.d - target).abs().total_cmp(&(b.d - target).abs()))
            .expect("enough triangles");
        picked.push(*t);
    }
    Ok(picked)
}

fn kernel_outcome(checks: Vec<crate::liouville::KernelCheck>) -> Outcome {
    let rows = checks
        .iter()
        .map(|c| vec![c.label.clone(), num(c.kernel), num(c.fd_value), num(c.fd_error), num(c.agreement)])
        .collect();
    let mut artifacts = Artifacts::default();
    artifacts.table("kernel_checks.csv", &["label", "kernel", "fd", "fd_error", "agreement"], rows);
    Outcome {
        checks: checks
            .iter()
            .map(|c| Check::at_most(format!("kernel_vs_fd {}", c.label), c.agreement, 1e-4))
            .collect(),
        result: json!({ "kernel_checks": checks }),
        artifacts,
    }
}

fn run_elemshear(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let phi = cfg.test_function(lam)?;
    let gs = match &cfg.leaf {
        Some(leaf) => vec![parse_geodesic(leaf)?],
        None => elemshear_geodesics(lam)?,
    };
    let checks = gs
        .iter()
        .map(|g| check_kernel_geodesic(&phi, g, &cfg.quadrature, &cfg.fd_steps))
        .collect::<Result<Vec<_>>>()?;
    Ok(kernel_outcome(checks))
}

fn run_defct(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let phi = cfg.test_function(lam)?;
    let tris = match &cfg.triangle {
        Some(t) => vec![parse_triangle(lam, t)?],
        None => defct_triangles(lam, &phi)?,
    };
    let checks = tris
        .iter()
        .map(|t| check_kernel_triangle(lam, &phi, t, &cfg.quadrature, &cfg.fd_steps))
        .collect::<Result<Vec<_>>>()?;
    Ok(kernel_outcome(checks))
}

fn run_dercomshear(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let phi = cfg.test_function(lam)?;
    let sigma = cfg.cocycle()?;
    let input = SeriesInput {
        lam,
        phi: &phi,
        sigma: &sigma,
        quadrature: cfg.quadrature,
    };
    let r = verify_finite_truncation(&input, &lam.spanning_family(cfg.n), &cfg.fd_steps)?;
    Ok(Outcome {
        checks: vec![Check::at_most("finite_identity", r.identity_gap.unwrap_or(f64::NAN), 1e-3)],
        result: json!(r),
        artifacts: Artifacts::default(),
    })
}

/// Largest `|d(O, O_T) − D_T − |u_T||` over `enumerate(radius)`.
pub fn esto_worst(tris: &[IdealTriangle]) -> f64 {
    tris.iter()
        .map(|t| (t.center_dist - t.d - t.u.abs()).abs())
        .fold(0.0, f64::max)
}

fn run_esto(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let tris = lam.enumerate_triangles(cfg.n);
    let worst = esto_worst(&tris);
    let mut buf = Vec::new();
    FareyLamination::write_csv(&tris, &mut buf)?;
    fs::write(cfg.output_path.join("triangles.csv"), buf)?;
    Ok(Outcome {
        checks: vec![Check::at_most("center_distance_slack", worst, ESTO_BOUND)],
        result: json!({ "triangles": tris.len(), "worst": worst, "bound": ESTO_BOUND }),
        artifacts: Artifacts::default(),
    })
}

fn run_theorem(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let phi = cfg.test_function(lam)?;
    let sigma = cfg.cocycle()?;
    let input = SeriesInput {
        lam,
        phi: &phi,
        sigma: &sigma,
        quadrature: cfg.quadrature,
    };
    let r = verify_main_theorem(&input, cfg.n, &cfg.fd_steps)?;
    let k = r.partial_sums.len();
    let b = r.boundary_terms.last().map_or(f64::NAN, |x| x.1);
    let mut checks = vec![
        Check::at_most("series_vs_fd", r.agreement.unwrap_or(f64::NAN), 1e-3),
        Check::at_most("finite_identity", r.identity_gap.unwrap_or(f64::NAN), 1e-3),
        Check::at_most("boundary_fraction", b.abs() / r.series_value.abs(), 0.1),
    ];
    if k >= 2 {
        let step = (r.partial_sums[k - 1].1 - r.partial_sums[k - 2].1).abs();
        checks.push(Check::at_most("cauchy_tail", step, r.tail_bound));
    }
    let mut result = json!({ "derivative": r });
    if let Some(t0) = cfg.t0 {
        let u = t_uniformity_check(&input, &lam.spanning_family(cfg.n), t0, &cfg.fd_steps)?;
        checks.push(Check::at_most("t_uniformity", u.agreement, 5e-3));
        result["t_uniformity"] = json!(u);
    }
    let c = base_point_continuity(&input, cfg.n, cfg.continuity_eps)?;
    checks.push(Check {
        name: "base_point_lipschitz_ratio".into(),
        measured: c.lipschitz_ratio,
        bound: f64::INFINITY,
        passed: c.lipschitz_ratio.is_finite(),
    });
    result["continuity"] = json!(c);
    let mut artifacts = Artifacts::default();
    artifacts.table("partial_sums.csv", &SUMS_HEADER, partial_sum_rows(&r));
    artifacts.table("decay.csv", &DECAY_HEADER, decay_rows(&r.decay_table));
    artifacts.plot = Some(SERIES_PLOT.into());
    Ok(Outcome {
        checks,
        result,
        artifacts,
    })
}

/// Largest decay ratio over `D_T ≤ n/2` and over `D_T > n/2`.
pub fn decay_shell_maxima(rows: &[crate::series::DecayRow], n: f64) -> (f64, f64) {
    let max = |f: &dyn Fn(f64) -> bool| rows.iter().filter(|r| f(r.d)).map(|r| r.ratio).fold(0.0, f64::max);
    (max(&|d| d <= 0.5 * n), max(&|d| d > 0.5 * n && d <= n))
}

fn run_decay_scan(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let phi = cfg.test_function(lam)?;
    let sigma = cfg.cocycle()?;
    let tris = lam.enumerate_triangles(cfg.n);
    let kernels = triangle_kernels(&phi, &tris, &cfg.quadrature)?;
    let alpha = sigma.alpha_map(lam, &tris)?;
    let sig: Vec<f64> = tris.iter().map(|t| alpha[&t.tri.key()]).collect();
    let rows = decay_table(&phi, &tris, &kernels, &sig);
    let (inner, outer) = decay_shell_maxima(&rows, cfg.n);
    let mut artifacts = Artifacts::default();
    artifacts.table("decay.csv", &DECAY_HEADER, decay_rows(&rows));
    artifacts.plot = Some(
        "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset xlabel 'D_T'\n\
         plot 'decay.csv' using 3:7 with points pt 7 ps 0.4 title 'decay ratio'\n"
            .into(),
    );
    Ok(Outcome {
        checks: vec![Check::at_most("outer_shell_ratio", outer, 10.0 * inner)],
        result: json!({
            "triangles": tris.len(),
            "nu": phi.holder_exponent(),
            "inner_max": inner,
            "outer_max": outer,
        }),
        artifacts,
    })
}

fn run_boundary_scan(cfg: &RunConfig, lam: &FareyLamination) -> Result<Outcome> {
    let phi = cfg.test_function(lam)?;
    let sigma = cfg.cocycle()?;
    let input = SeriesInput {
        lam,
        phi: &phi,
        sigma: &sigma,
        quadrature: cfg.quadrature,
    };
    let b = boundary_scan(&input, &cfg.ns)?;
    let nu = phi.holder_exponent();
    let mut checks = vec![];
    if b.len() >= 2 {
        let worst_step = b
            .windows(2)
            .map(|w| w[1].1.abs() - w[0].1.abs())
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check {
            name: "strictly_decreasing".into(),
            measured: worst_step,
            bound: 0.0,
            passed: worst_step < 0.0,
        });
        checks.push(Check::at_most("log_slope", log_slope(&b), -0.5 * nu));
    }
    let mut artifacts = Artifacts::default();
    artifacts.table(
        "boundary.csv",
        &["n", "boundary_term"],
        b.iter().map(|&(n, v)| vec![n.to_string(), num(v)]).collect(),
    );
    artifacts.plot = Some(
        "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset xlabel 'n'\n\
         plot 'boundary.csv' using 1:(abs($2)) with linespoints title '|B_n|'\n"
            .into(),
    );
    Ok(Outcome {
        checks,
        result: json!({ "boundary_terms": b, "nu": nu }),
        artifacts,
    })
}

#[derive(Parser, Debug)]
#[command(name = "liouville", version, about = "Liouville current integrals and the derivative of the Liouville map")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Integral of a test function against the Liouville current.
    Integrate(Opts),
    /// Cosine kernel of a geodesic or triangle, checked by finite differences.
    Kernel(Opts),
    /// Partial sums of the tangent series.
    Series(Opts),
    /// One of the lemma-level checks.
    VerifyLemma(Opts),
    /// Series against finite differences of the truncated shear.
    VerifyTheorem(Opts),
    /// Decay ratios of triangle kernels.
    DecayScan(Opts),
    /// Boundary terms over spanning families.
    BoundaryScan(Opts),
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin test function or `crossing-mass`.
    #[arg(long = "phi")]
    phi: Option<String>,
    /// `zero`, `dirac:p/q,r/s`, `depth_decay:b,r`, `seeded:s,b`, `constant:w`.
    #[arg(long)]
    cocycle: Option<String>,
    /// Truncation radius.
    #[arg(long)]
    n: Option<f64>,
    /// Radii for `boundary-scan`, comma separated.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<f64>>,
    /// Crossing-mass segment length.
    #[arg(long)]
    ell: Option<f64>,
    /// Crossing-mass mollification width.
    #[arg(long)]
    mollifier: Option<f64>,
    /// Crossing-mass staircase resolution.
    #[arg(long)]
    pieces: Option<usize>,
    #[arg(long, value_enum)]
    lemma: Option<Lemma>,
    /// Oriented geodesic `p/q,r/s`.
    #[arg(long)]
    leaf: Option<String>,
    /// Farey triangle `u,c,w`.
    #[arg(long)]
    triangle: Option<String>,
    /// Base of the t-uniformity check.
    #[arg(long)]
    t0: Option<f64>,
    /// Base-point displacement for the continuity report.
    #[arg(long)]
    continuity_eps: Option<f64>,
    /// Finite-difference steps, comma separated.
    #[arg(long, value_delimiter = ',')]
    fd_steps: Option<Vec<f64>>,
    /// Quadrature panels per circle at level 0.
    #[arg(long)]
    base_grid: Option<usize>,
    /// Relative refinement tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Maximum quadrature refinement levels.
    #[arg(long)]
    max_levels: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

impl Opts {
    fn into_config(self, command: Command) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        c.command = command;
        macro_rules! set {
            ($($src:ident => $($dst:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$src { c.$($dst).+ = v; })*
            };
        }
        set!(phi => test_function, n => n, ns => ns, ell => ell, mollifier => mollifier, pieces => pieces,
             fd_steps => fd_steps, base_grid => quadrature.base_grid, tol => quadrature.refinement_tol,
             max_levels => quadrature.max_levels, out => output_path, seed => seed,
             continuity_eps => continuity_eps);
        if let Some(v) = self.cocycle {
            c.cocycle = CocycleArg::Short(v);
        }
        if self.lemma.is_some() {
            c.lemma = self.lemma;
        }
        if self.leaf.is_some() {
            c.leaf = self.leaf;
        }
        if self.triangle.is_some() {
            c.triangle = self.triangle;
        }
        if self.t0.is_some() {
            c.t0 = self.t0;
        }
        Ok(c)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("LIOUVILLE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    configure_threads();
    let (command, opts) = match cli.command {
        Cmd::Integrate(o) => (Command::Integrate, o),
        Cmd::Kernel(o) => (Command::Kernel, o),
        Cmd::Series(o) => (Command::Series, o),
        Cmd::VerifyLemma(o) => (Command::VerifyLemma, o),
        Cmd::VerifyTheorem(o) => (Command::VerifyTheorem, o),
        Cmd::DecayScan(o) => (Command::DecayScan, o),
        Cmd::BoundaryScan(o) => (Command::BoundaryScan, o),
    };
    let result = opts.into_config(command).and_then(|c| run(&c));
    match result {
        Ok(report) => {
            // a closed stdout must not turn a finished run into a panic
            let mut out = std::io::stdout().lock();
            let tag = &report.config_hash[..12];
            for c in &report.checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(
                    out,
                    "{verdict} {}: measured {:e}, bound {:e} [config {tag}]",
                    c.name, c.measured, c.bound
                );
            }
            if let Some(e) = &report.error {
                let _ = writeln!(out, "FAIL {e} [config {tag}]");
            }
            let _ = writeln!(out, "report: {}", report.config.output_path.join("report.json").display());
            if report.passed {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

//! The tangent series against finite differences of the truncated shear.
//!
//!     cargo run --release --example tangent_series [n]

use liouville::cocycle::TransverseCocycle;
use liouville::farey::FareyLamination;
use liouville::liouville::builtin_by_name;
use liouville::quadrature::{QuadratureSpec, DEFAULT_FD_STEPS};
use liouville::series::{boundary_scan, log_slope, verify_main_theorem, SeriesInput};

fn main() -> liouville::error::Result<()> {
    let n: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8.0);
    let lam = FareyLamination::default();
    let phi = builtin_by_name(&lam, "holder-0.5-balanced")?;
    let sigma = TransverseCocycle::depth_decay(1.0, 0.5)?;
    let input = SeriesInput {
        lam: &lam,
        phi: &phi,
        sigma: &sigma,
        quadrature: QuadratureSpec::default(),
    };

    let r = verify_main_theorem(&input, n, &DEFAULT_FD_STEPS)?;
    for (k, s) in &r.partial_sums {
        println!("S_{k} = {s:+.10e}");
    }
    println!("tail bound at the previous rung: {:.3e}", r.tail_bound);
    println!("extrapolated series: {:+.10e}", r.series_value);
    println!("fd of truncated pullback: {:+.10e} (± {:.1e})", r.fd_value.unwrap(), r.fd_error.unwrap());
    println!("interior + boundary gap: {:.2e}", r.identity_gap.unwrap());
    println!("S_n + B_n gap: {:.2e}", r.agreement.unwrap());

    let b = boundary_scan(&input, &[4.0, 6.0, 8.0])?;
    println!("boundary terms {b:?}, log-slope {:.3}", log_slope(&b));
    Ok(())
}

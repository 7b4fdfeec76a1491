//! Liouville integrals of the builtin test functions, the crossing-mass
//! closed form, and cosine kernels against finite differences.
//!
//!     cargo run --release --example liouville_quadrature

use liouville::cli::{elemshear_geodesics, mobius_invariance_gaps};
use liouville::farey::FareyLamination;
use liouville::liouville::{
    builtin_test_functions, check_kernel_geodesic, crossing_mass, liouville_integral, CROSSING_MASS_TOL,
};
use liouville::quadrature::{QuadratureSpec, DEFAULT_FD_STEPS};

fn main() -> liouville::error::Result<()> {
    let lam = FareyLamination::default();
    let q = QuadratureSpec::default();
    for phi in builtin_test_functions(&lam)? {
        let r = liouville_integral(&phi, &q)?;
        let gap = mobius_invariance_gaps(&phi, &q, 3, 2)?.into_iter().fold(0.0, f64::max);
        println!(
            "{:<40} nu {:.1}  R {:.3}  integral {:.10}  (level {}, Möbius gap {:.1e})",
            phi.name(),
            phi.holder_exponent(),
            phi.support_radius(),
            r.value,
            r.level,
            gap
        );
    }

    let loose = QuadratureSpec { refinement_tol: CROSSING_MASS_TOL, ..q };
    for ell in [0.5, 1.0, 2.0] {
        let phi = crossing_mass(*lam.chart(), ell, 0.05, 48)?;
        let v = liouville_integral(&phi, &loose)?.value;
        println!("crossing mass, ell = {ell}: {v:.8} vs 4 ell = {}", 4.0 * ell);
    }

    let pin = liouville::liouville::builtin_by_name(&lam, "pin")?;
    for g in elemshear_geodesics(&lam)? {
        let c = check_kernel_geodesic(&pin, &g, &q, &DEFAULT_FD_STEPS)?;
        println!("C(pin, {}) = {:+.10e}  fd {:+.10e}  gap {:.1e}", c.label, c.kernel, c.fd_value, c.agreement);
    }
    Ok(())
}

//! Charts, Möbius maps and the Liouville density.
//!
//!     cargo run --example hyperbolic_geometry

use liouville::hyperbolic::{liouville_density, Chart, Geodesic, HPoint, MobiusMap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> liouville::error::Result<()> {
    let base = HPoint::new(0.5, 0.75f64.sqrt())?;
    let chart = Chart::new(base);
    println!("base point {:?}", base.to_complex());
    for x in ["inf", "0", "1/2", "1"] {
        let p = match x {
            "inf" => liouville::hyperbolic::BoundaryPoint::new(1.0, 0.0)?,
            _ => x.parse::<liouville::farey::Fraction>()?.to_boundary(),
        };
        println!("  angle of {x:>3}: {:.6}", chart.theta(&p));
    }

    // the density is what 2 dx dy / (x - y)^2 becomes in boundary angles
    let (t1, t2) = (3.5, 0.9);
    println!("Liouville density at ({t1}, {t2}) = {:.6}", liouville_density(t1, t2));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = MobiusMap::random_near_identity(&mut rng, 0.3);
    let g = Geodesic::from_reals(0.0, 1.0)?;
    let h = m.apply_geodesic(&g);
    println!("det {:.3e}, moved geodesic {} -> {}", m.det() - 1.0, h.from, h.to);
    println!("d(O, M O) = {:.6}", base.dist(&m.apply_point(&base)));
    Ok(())
}

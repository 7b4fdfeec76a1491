//! Elementary earthquakes, triangle factors and truncated shear maps.
//! A Dirac cocycle on one leaf should shear like the elementary
//! earthquake along that leaf.
//!
//!     cargo run --release --example earthquakes

use liouville::cocycle::TransverseCocycle;
use liouville::earthquake::EarthquakeMap;
use liouville::farey::FareyLamination;

fn sup_gap(a: &EarthquakeMap, b: &EarthquakeMap, samples: usize) -> f64 {
    (0..samples)
        .map(|k| {
            let th = std::f64::consts::TAU * (k as f64 + 0.5) / samples as f64;
            let d = a.eval_theta(th).0 - b.eval_theta(th).0;
            d.sin().abs()
        })
        .fold(0.0, f64::max)
}

fn main() -> liouville::error::Result<()> {
    let lam = FareyLamination::default();
    let t = lam.triangle("0".parse()?, "1/2".parse()?, "1".parse()?)?;
    let shear = 0.5;
    let target = EarthquakeMap::elementary(lam.base(), t.g3, shear)?;
    let dirac = TransverseCocycle::dirac(t.tri.g3()).scaled(shear);
    for n in [4.0, 6.0, 8.0, 10.0] {
        let e = EarthquakeMap::truncated_shear(&lam, &dirac, &lam.spanning_family(n))?;
        println!(
            "n = {n:>4}: {:>4} factors, monotone {}, sup gap to E_g = {:.2e}",
            e.factors().len(),
            e.is_monotone_on_samples(4096),
            sup_gap(&e, &target, 512)
        );
    }

    let tf = EarthquakeMap::triangle_factor(&lam, &t, 0.3)?;
    let back = tf.compose(&tf.inverse()?)?;
    println!("triangle factor breakpoints: {}", tf.breakpoints().len());
    println!("E o E^-1 deviation from identity: {:.2e}", sup_gap(&back, &EarthquakeMap::identity(lam.base()), 512));

    let path = std::env::temp_dir().join("triangle_factor.csv");
    tf.write_boundary_csv(1024, std::fs::File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

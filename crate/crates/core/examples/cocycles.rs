//! Transverse cocycles and their path sums alpha(T).
//!
//!     cargo run --release --example cocycles

use liouville::cocycle::{alpha_growth_report, CocycleSpec};
use liouville::farey::FareyLamination;

fn main() -> liouville::error::Result<()> {
    let lam = FareyLamination::default();
    let t = lam.triangle("3/4".parse()?, "4/5".parse()?, "1".parse()?)?;
    for spec in ["dirac:0/1,1/1", "depth_decay:1,0.5", "seeded:7,0.3", "constant:1"] {
        let c = spec.parse::<CocycleSpec>()?.build()?;
        let growth = alpha_growth_report(&lam, &c, 8.0)?;
        println!(
            "{:<20} alpha{} = {:+.5}   max |alpha|/(1+depth) = {:.3}  linear growth: {}",
            c.label(),
            t.tri,
            c.alpha(&lam, &t.tri)?,
            growth.max_ratio,
            growth.linear_growth
        );
    }
    // config files carry the tagged form
    let spec: CocycleSpec = "depth_decay:1,0.5".parse()?;
    println!("{}", serde_json::to_string(&spec)?);
    Ok(())
}

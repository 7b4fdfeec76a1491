//! Enumerate Farey triangles around the base point, build a spanning
//! family and check the center-distance estimate.
//!
//!     cargo run --release --example farey_lamination [radius]

use liouville::cli::{esto_worst, ESTO_BOUND};
use liouville::farey::FareyLamination;

fn main() -> liouville::error::Result<()> {
    let radius: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8.0);
    let lam = FareyLamination::default();
    let tris = lam.enumerate_triangles(radius);
    println!("{} triangles with center within {radius}", tris.len());
    for t in tris.iter().take(6) {
        println!("  {}  depth {}  D = {:.4}  u = {:+.4}  d(O,O_T) = {:.4}", t.tri, t.depth(), t.d, t.u, t.center_dist);
    }

    let family = lam.spanning_family(radius);
    println!(
        "spanning family: {} maximal triangles, {} below them",
        family.members.len(),
        family.below.len()
    );
    println!("worst |d(O,O_T) - D_T - |u_T|| = {:.4} (bound {:.4})", esto_worst(&tris), ESTO_BOUND);

    let path = std::env::temp_dir().join("farey_triangles.csv");
    FareyLamination::write_csv(&tris, std::fs::File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

//! Lower bounds for the amenability constant of a subset.
//!
//! cargo run --example amenability

use freep::io::read_space;
use freep::{amen_estimate, embedding_ratio, isometric_3pt_test, optimal_extension_3pt, AmenOptions, Molecule};

fn main() -> freep::Result<()> {
    let p = 0.5;
    let hub = read_space(concat!(env!("CARGO_MANIFEST_DIR"), "/data/equilateral_hub.json").as_ref())?;
    let subset = [0, 1, 2];

    let a = Molecule::new(vec![0.0, 1.0, 1.0, 0.0])?;
    println!("ratio at (1, 1): {:.9}", embedding_ratio(&hub, &subset, &a, p)?);

    let est = amen_estimate(&hub, &subset, p, &AmenOptions::default())?;
    println!(
        "multi-start estimate {:.9} after {} evaluations (converged {})",
        est.value, est.evaluations, est.converged
    );
    let grid = amen_estimate(&hub, &subset, p, &AmenOptions { grid: true, ..AmenOptions::default() })?;
    println!("grid estimate        {:.9}", grid.value);

    // The hub is the best fourth point for the unit triangle.
    println!("unit triangle tight at p = {p}: {}", isometric_3pt_test(1.0, 1.0, 1.0, p)?);
    let ext = optimal_extension_3pt(1.0, 1.0, 1.0, p)?;
    println!("optimal z distances {:?}", ext.z_distances());
    for (a, b) in [(1.0, 1.0), (1.0, -1.0), (2.0, 1.0)] {
        println!("  ||{a} x + {b} y|| in the extension = {:.6}", ext.norm(a, b));
    }
    Ok(())
}

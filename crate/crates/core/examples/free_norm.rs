//! Exact free p-norm of a molecule on a small space.
//!
//! cargo run --example free_norm

use freep::io::read_space;
use freep::{free_norm, free_norm_pruned, star_upper_bound, three_point_norm, Molecule};

fn main() -> freep::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/equilateral.json");
    let space = read_space(path.as_ref())?;
    let x = space.index_of("x").unwrap();
    let y = space.index_of("y").unwrap();

    for (a, b) in [(1.0, 1.0), (1.0, -1.0), (3.0, -1.0)] {
        let mol = Molecule::from_pairs(space.len(), &[(x, a), (y, b)])?;
        for p in [0.25, 0.5, 1.0] {
            let r = free_norm(&space, &mol, p)?;
            let closed = three_point_norm(1.0, 1.0, 1.0, a, b, p)?;
            let star = star_upper_bound(&space, &mol, p)?;
            println!("a={a:>4} b={b:>4} p={p:<5} norm {:.6}  closed form {closed:.6}  star {star:.6}", r.value);
            for (u, v) in r.witness.edges() {
                println!("    {} -> {}", space.label(u), space.label(v));
            }
        }
    }

    // A zero coefficient lets the pruned evaluator skip a point.
    let hub = read_space(concat!(env!("CARGO_MANIFEST_DIR"), "/data/equilateral_hub.json").as_ref())?;
    let mol = Molecule::new(vec![0.0, 1.0, 1.0, 0.0])?;
    let full = free_norm(&hub, &mol, 0.5)?;
    let pruned = free_norm_pruned(&hub, &mol, 0.5)?;
    println!(
        "hub: full {:.9} ({} trees), pruned {:.9} ({} trees)",
        full.value, full.trees_evaluated, pruned.value, pruned.trees_evaluated
    );
    Ok(())
}

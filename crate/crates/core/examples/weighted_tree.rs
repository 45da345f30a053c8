//! Path metrics on weighted trees and splitting a tree at a vertex.
//!
//! cargo run --example weighted_tree

use freep::io::read_tree;
use freep::{free_norm, path_p_metric, split_at_vertex, tree_value, Molecule};

fn main() -> freep::Result<()> {
    let (tree, q) = read_tree(concat!(env!("CARGO_MANIFEST_DIR"), "/data/two_point_tree.json").as_ref())?;
    let space = path_p_metric(&tree, q)?;
    println!("leaves {:?}", tree.leaves());
    for row in space.matrix() {
        println!("  {}", row.iter().map(|d| format!("{d:9.4}")).collect::<String>());
    }

    let p = 0.5;
    let a = Molecule::new(vec![0.0, 0.0, 1.0, 1.0])?;
    let own = tree_value(tree.topology(), &a, &space, p)?;
    let best = free_norm(&space, &a, p)?;
    println!("own topology {:.6}, best over all trees {:.6}", own.value, best.value);

    let z = 1;
    let (upper, lower) = split_at_vertex(tree.topology(), &a, z)?;
    let sum = upper.value(&space, p)?.p_power + lower.value(&space, p)?.p_power;
    println!("split at z: whole {:.6}, sum of parts {:.6}", own.p_power, sum);
    Ok(())
}

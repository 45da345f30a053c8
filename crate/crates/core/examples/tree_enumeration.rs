//! Rooted labeled trees via Prüfer sequences, with sharding.
//!
//! cargo run --example tree_enumeration

use std::collections::BTreeSet;

use freep::{enumerate_rooted_trees, pruefer_decode, tree_count, Partition};

fn main() -> freep::Result<()> {
    for m in 2..=10 {
        println!("m = {m:>2}: {} trees", tree_count(m).unwrap());
    }

    let t = pruefer_decode(&[3, 3, 0], 0)?;
    println!("sequence [3, 3, 0] rooted at 0:");
    for (parent, child) in t.edges() {
        println!("  {parent} -> {child}");
    }
    println!("round trip: {:?}", t.to_pruefer());

    let m = 6;
    let all: Vec<Vec<Option<usize>>> = enumerate_rooted_trees(m, 0, None)?
        .map(|t| (0..m).map(|x| t.parent(x)).collect())
        .collect();
    let mut union = BTreeSet::new();
    for shard in 0..7 {
        let part = enumerate_rooted_trees(m, 0, Some(Partition { shard, total: 7 }))?;
        let trees: Vec<_> = part.map(|t| (0..m).map(|x| t.parent(x)).collect::<Vec<_>>()).collect();
        println!("shard {shard}: {} trees", trees.len());
        union.extend(trees);
    }
    println!("{} trees total, {} distinct across shards", all.len(), union.len());
    Ok(())
}

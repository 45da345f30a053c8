//! A small reproducible search campaign with replay.
//!
//! cargo run --release --example search_campaign

use freep::{read_records, replay_record, search_campaign, SearchConfig, SearchMode};

fn main() -> freep::Result<()> {
    let out = std::env::temp_dir().join("freep-example.csv");
    let mut config = SearchConfig::new(SearchMode::WeightedTree, 2, 3, 0.5, 0.5, 200, 7, &out);
    config.starts_per_instance = 2;
    let summary = search_campaign(&config)?;
    println!(
        "{} instances, max ratio {:.7} at instance {}",
        summary.records.len(),
        summary.max_ratio,
        summary.argmax.instance_id
    );
    println!("2^(1/q) = {} exceeded: {}", summary.conjectured_bound, summary.exceeds);
    println!("within retraction cap {:?}: {}", summary.retract_cap, summary.within_retract_cap);

    let records = read_records(&out)?;
    let worst = records
        .iter()
        .map(|r| Ok((replay_record(&config, r)? - r.ratio).abs()))
        .collect::<freep::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("replayed {} records, max drift {worst:.2e}", records.len());
    println!("results in {} and {}", out.display(), config.manifest_path().display());
    Ok(())
}

//! Checking and repairing p-metric distance matrices.
//!
//! cargo run --example metric_closure

use freep::{p_metric_closure, validate_p_metric, PMetricSpace, METRIC_TOLERANCE};

fn main() -> freep::Result<()> {
    let d = vec![
        vec![0.0, 1.0, 5.0, 2.0],
        vec![1.0, 0.0, 1.0, 3.0],
        vec![5.0, 1.0, 0.0, 1.0],
        vec![2.0, 3.0, 1.0, 0.0],
    ];
    for q in [1.0, 0.5, 0.25] {
        let report = validate_p_metric(&d, q, METRIC_TOLERANCE)?;
        println!("q = {q}: {} violations", report.violations.len());
        for v in report.violations.iter().take(3) {
            println!("  {v}");
        }
        let fixed = p_metric_closure(&d, q)?;
        for row in &fixed {
            println!("  {}", row.iter().map(|x| format!("{x:8.4}")).collect::<String>());
        }
        let space = PMetricSpace::from_matrix(q, fixed)?;
        println!("  repaired space has {} points", space.len());
    }
    Ok(())
}

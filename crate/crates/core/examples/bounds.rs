//! Closed-form lower and upper bounds.
//!
//! cargo run --example bounds

use freep::{bound_one_extra_point, bound_two_points, metric_amen_bound, retract_upper_bound};

fn main() -> freep::Result<()> {
    println!("one added point, p = q = 1/2");
    for n in 2..=6 {
        let b = bound_one_extra_point(n, 0.5, 0.5)?;
        println!("  n = {n}: lower {:.6}  witness {:.6}  upper {:.6}", b.lower, b.witness.ratio(0.5)?, b.upper);
    }

    println!("two-point subsets");
    for (p, q) in [(0.25, 0.25), (0.5, 0.5), (0.5, 1.0), (2.0 / 3.0, 1.0), (0.9, 1.0)] {
        let b = bound_two_points(p, q)?;
        println!(
            "  p = {p:.3} q = {q}: root weight {:.6}  ratio {:.7}  ratio^p {:.7}",
            b.root_weight, b.bound, b.bound_p
        );
    }

    let r = retract_upper_bound(3, 6, 0.5)?;
    println!("retraction caps, n = 3 of k = 6, q = 1/2: {} and {}", r.pair, r.absolute);
    println!("metric superspaces, p = 1/2: {}", metric_amen_bound(0.5)?);
    Ok(())
}

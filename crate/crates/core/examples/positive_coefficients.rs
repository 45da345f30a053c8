//! Nonnegative molecules: when the star tree is optimal.
//!
//! cargo run --example positive_coefficients

use freep::{free_norm, nearest_is_base, positive_condition_and_norm, positive_violation_witness, star_upper_bound};
use freep::{Molecule, PMetricSpace};

fn main() -> freep::Result<()> {
    let p = 0.5;
    // Base at the centre: every point is closest to the base.
    let centred = PMetricSpace::from_matrix(
        1.0,
        vec![vec![0.0, 1.0, 1.0, 1.0], vec![1.0, 0.0, 2.0, 2.0], vec![1.0, 2.0, 0.0, 2.0], vec![1.0, 2.0, 2.0, 0.0]],
    )?;
    // Points 1 and 2 sit next to each other, far from the base.
    let clustered = PMetricSpace::from_matrix(
        1.0,
        vec![vec![0.0, 3.0, 3.0, 1.0], vec![3.0, 0.0, 0.5, 3.0], vec![3.0, 0.5, 0.0, 3.0], vec![1.0, 3.0, 3.0, 0.0]],
    )?;
    let a = Molecule::new(vec![0.0, 1.0, 2.0, 0.5])?;

    for (name, s) in [("centred", &centred), ("clustered", &clustered)] {
        let r = positive_condition_and_norm(s, &a, p)?;
        println!(
            "{name}: nearest is base {}, norm^p {:.6}, star^p {:.6}",
            nearest_is_base(s),
            r.norm.p_power,
            r.closed_form_p_power
        );
        match positive_violation_witness(s, p)? {
            None => println!("  no witness needed"),
            Some((x, y, w)) => println!(
                "  witness on ({x}, {y}) with coefficients {:?}: norm {:.6} < star {:.6}",
                w.coeffs(),
                free_norm(s, &w, p)?.value,
                star_upper_bound(s, &w, p)?
            ),
        }
    }
    Ok(())
}

//! Mann-Whitney U test of two samples, as used to compare initial and final
//! populations.
//!
//! ```text
//! cargo run --example mann_whitney
//! ```

use varigen::stats::{acceptance_region, mann_whitney_u};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Source similarity of two small populations: one close to the source,
    // one that has drifted away.
    let near = [0.98, 0.99, 0.97, 1.0, 0.98, 0.96, 0.99, 0.98];
    let far = [0.51, 0.48, 0.55, 0.47, 0.5, 0.49, 0.52, 0.5];
    let shifted = [0.97, 0.99, 0.98, 0.98, 1.0, 0.97, 0.99, 0.96];

    for (name, other) in [("near vs far", &far), ("near vs near", &shifted)] {
        let r = mann_whitney_u(&near, other)?;
        println!(
            "{name}: U={} (U1={}, U2={}) z={:.4} p={:.3e} reject={}",
            r.u, r.u1, r.u2, r.z, r.p_two_tailed, r.reject_null
        );
    }
    let (lo, hi) = acceptance_region(20, 20, 0.05)?;
    println!("U acceptance region for 20 vs 20 without ties: {lo:.3} to {hi:.3}");
    Ok(())
}

//! Autocorrelation of normalized rank flights, averaged over a seeded sample
//! of tokens. The walk has independent steps, so C_tau drops to about zero
//! beyond the first lag.
//!
//! ```text
//! cargo run --release --example flight_correlation
//! ```

use rank_diversity::dynamics::averaged_correlation;
use rank_diversity::walker::{simulate, WalkConfig};

fn main() -> rank_diversity::Result<()> {
    let tables = simulate(&WalkConfig::new(10_000, 209, 0.0575, 3))?;
    let avg = averaged_correlation(&tables, 50, 10, 3)?;
    println!(
        "sampled {} tokens, e.g. {:?}",
        avg.sample.len(),
        &avg.sample[..3]
    );
    for (tau, c) in avg.c.iter().enumerate() {
        println!("tau = {tau:>2}  C = {c:+.4}");
    }
    Ok(())
}

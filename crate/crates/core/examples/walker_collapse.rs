//! The random walk model on 10^5 items: after standardizing log10 k with the
//! fitted (mu, sigma), the diversity curve falls on the standard normal CDF.
//!
//! ```text
//! cargo run --release --example walker_collapse [-- seed]
//! ```

use rank_diversity::diversity::analyze_window;
use rank_diversity::special::std_normal_cdf;
use rank_diversity::walker::{
    max_deviation_from_standard, normalized_diversity, simulate, WalkConfig,
};

fn main() -> rank_diversity::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let n = 100_000;
    let tables = simulate(&WalkConfig::new(n, 209, 0.0575, seed))?;
    let (curve, fit) = analyze_window(&tables, n, 0.1)?;
    let points = normalized_diversity(&curve, &fit);
    println!("mu = {:.3}, sigma = {:.3}", fit.mu, fit.sigma);
    println!("{:>7} {:>7} {:>7}", "z", "d(z)", "Phi(z)");
    for &(z, d) in points.iter().filter(|(z, _)| z.abs() <= 2.5) {
        println!("{z:>7.3} {d:>7.4} {:>7.4}", std_normal_cdf(z));
    }
    let dev = max_deviation_from_standard(&points, -2.0, 2.0).unwrap_or(f64::NAN);
    println!("max |d(z) - Phi(z)| on [-2, 2] = {dev:.4}");
    Ok(())
}

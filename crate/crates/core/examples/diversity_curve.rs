//! Rank diversity of a simulated series: raw d(k), the log-binned curve and
//! its sigmoid fit with the head/body/tail boundaries.
//!
//! ```text
//! cargo run --release --example diversity_curve
//! ```

use rank_diversity::diversity::{analyze_window, Regime, DEFAULT_DELTA};
use rank_diversity::walker::{simulate, WalkConfig};

fn main() -> rank_diversity::Result<()> {
    let tables = simulate(&WalkConfig::new(20_000, 100, 0.0575, 1))?;
    let (curve, fit) = analyze_window(&tables, 20_000, DEFAULT_DELTA)?;
    println!("T = {} slices, k_max = {}", curve.t, curve.k_max());
    println!(
        "mu = {:.3}, sigma = {:.3}, mse = {:.2e}",
        fit.mu, fit.sigma, fit.mse
    );
    println!("k- = {:.1}, k+ = {:.0}", fit.k_minus, fit.k_plus);
    println!("{:>8} {:>8} {:>8}", "log10 k", "d", "fit");
    for p in curve.windowed.iter().step_by(3) {
        println!(
            "{:>8.2} {:>8.4} {:>8.4}",
            p.center,
            p.mean,
            fit.phi(p.center)
        );
    }
    for k in [1, 10, 100, 1000, 10_000] {
        let regime = match fit.classify(k) {
            Regime::Head => "head",
            Regime::Body => "body",
            Regime::Tail => "tail",
        };
        println!("rank {k:>6}: d = {:.3} ({regime})", curve.d(k));
    }
    Ok(())
}

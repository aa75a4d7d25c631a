//! Rank flights of a simulated series: the displacement scale sigma_hat, flight
//! histograms per rank band and Gaussian versus Lorentzian fits.
//!
//! ```text
//! cargo run --release --example rank_flights
//! ```

use rank_diversity::dynamics::{
    fit_flight_distribution, flight_histogram, sigma_hat, Family, FlightHistogram,
};
use rank_diversity::walker::{simulate, WalkConfig};

fn main() -> rank_diversity::Result<()> {
    let tables = simulate(&WalkConfig::new(20_000, 60, 0.0575, 2))?;
    let sh = sigma_hat(&tables, 10_000)?;
    println!("sigma_hat = {:.4} from {} tokens", sh.value, sh.tokens);

    let mut hists = Vec::new();
    for band in [(1, 10), (11, 100), (101, 1000), (1001, 10_000)] {
        let h = flight_histogram(&tables, band, 0.01)?;
        println!(
            "band {}-{}: {} flights, {} bins",
            band.0,
            band.1,
            h.sample_count,
            h.bins.len()
        );
        hists.push(h);
    }
    let average = FlightHistogram::average(&hists)?;
    for family in [Family::Gaussian, Family::Lorentzian] {
        match fit_flight_distribution(&average, family) {
            Ok(f) => println!(
                "{family:?}: loc = {:.4}, scale = {:.4}, sse = {:.3e}",
                f.location, f.scale, f.sse
            ),
            Err(e) => println!("{family:?}: {e}"),
        }
    }
    Ok(())
}

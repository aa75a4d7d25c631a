//! Fits the five rank-frequency models to a synthetic double power law and
//! reports chi-square, p-values and the fitted parameters.
//!
//! ```text
//! cargo run --release --example zipf_models
//! ```

use rank_diversity::rank::RankTable;
use rank_diversity::zipf::{fit_all, ZipfModel, ZipfModelSpec};

fn main() -> rank_diversity::Result<()> {
    let n = 2000;
    // exponent 1 up to rank 150, then 2
    let truth = ZipfModel::new(ZipfModelSpec::m5(2.0, 150, n))?;
    let counts: Vec<f64> = truth
        .pmf()
        .iter()
        .map(|p| (p * 1e7).round().max(1.0))
        .collect();
    let words: Vec<String> = (1..=n).map(|k| format!("w{k}")).collect();
    let table = RankTable::from_ranked(0, &words, Some(counts))?;

    for fit in fit_all(&table, 1..=n as usize)? {
        let r = fit.report();
        println!(
            "{}: chi2 = {:.4e} ({:?}), dof = {}, p = {}, params {:?}",
            r.family, r.chi2, r.chi2_kind, r.dof, r.p_value, r.params
        );
    }
    Ok(())
}

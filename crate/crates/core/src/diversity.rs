//! Rank diversity `d(k)`, its log-binned smoothing, and the cumulative
//! Gaussian fit in `log10 k` that splits ranks into head, body and tail.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Slice;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rank::{aligned_ids, check_ordered, RankTable};
use crate::special::normal_cdf;

/// Default bin width in `log10 k`.
pub const DEFAULT_DELTA: f64 = 0.1;

// Guards bin assignment against `log10(10^m) / delta` landing a hair below an integer.
const BIN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowedPoint {
    /// Bin center in `log10 k`.
    pub center: f64,
    /// Mean of raw `d(k)` over the ranks in the bin.
    pub mean: f64,
    /// Number of ranks that fell into the bin.
    pub ranks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityCurve {
    /// First and last slice of the window.
    pub window: (Slice, Slice),
    /// Number of slices in the window.
    pub t: usize,
    /// Distinct tokens seen at rank `k` is `distinct[k - 1]`.
    pub distinct: Vec<u32>,
    pub windowed: Vec<WindowedPoint>,
    pub delta: Option<f64>,
}

impl DiversityCurve {
    pub fn k_max(&self) -> usize {
        self.distinct.len()
    }

    /// `d(k)` for 1-based `k`.
    pub fn d(&self, k: usize) -> f64 {
        self.distinct[k - 1] as f64 / self.t as f64
    }

    /// `(k, d(k))` for every rank.
    pub fn raw(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (1..=self.k_max()).map(|k| (k, self.d(k)))
    }

    /// Writes `k,d_raw`.
    pub fn write_raw_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,d_raw")?;
        for (k, d) in self.raw() {
            writeln!(w, "{k},{d}")?;
        }
        w.flush()
    }

    /// Writes `bin_center,d_windowed,phi_fit`, evaluating `fit` at each center.
    pub fn write_windowed_csv<W: Write>(&self, fit: &SigmoidFit, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_center,d_windowed,phi_fit")?;
        for p in &self.windowed {
            writeln!(w, "{},{},{}", p.center, p.mean, fit.phi(p.center))?;
        }
        w.flush()
    }
}

/// Counts, for every rank `k <= k_max`, the distinct tokens holding it over `tables`.
pub fn rank_diversity(tables: &[RankTable], k_max: usize) -> Result<DiversityCurve> {
    if tables.len() < 2 {
        return Err(Error::domain(format!(
            "rank diversity needs at least 2 slices, got {}",
            tables.len()
        )));
    }
    if k_max == 0 {
        return Err(Error::domain("k_max must be positive"));
    }
    check_ordered(tables)?;
    if let Some(t) = tables.iter().find(|t| t.len() < k_max) {
        return Err(Error::domain(format!(
            "k_max = {k_max} exceeds the {} ranks of slice {}",
            t.len(),
            t.slice()
        )));
    }
    let (ids, vocab_len) = aligned_ids(tables);
    // `last[id] == k` marks `id` as already counted at rank k.
    let mut last = vec![0u32; vocab_len];
    let mut distinct = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut n = 0u32;
        for table in &ids {
            let id = table[k - 1] as usize;
            if last[id] != k as u32 {
                last[id] = k as u32;
                n += 1;
            }
        }
        distinct.push(n);
    }
    Ok(DiversityCurve {
        window: (tables[0].slice(), tables[tables.len() - 1].slice()),
        t: tables.len(),
        distinct,
        windowed: Vec::new(),
        delta: None,
    })
}

/// Averages `d(k)` over bins `[i*delta, (i+1)*delta)` of `log10 k`. Empty bins are omitted.
pub fn log_window(mut curve: DiversityCurve, delta: f64) -> Result<DiversityCurve> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!(
            "bin width must be positive, got {delta}"
        )));
    }
    let mut bins: Vec<WindowedPoint> = Vec::new();
    let mut current: Option<(i64, f64, usize)> = None;
    let flush = |bins: &mut Vec<WindowedPoint>, (i, sum, n): (i64, f64, usize)| {
        bins.push(WindowedPoint {
            center: (i as f64 + 0.5) * delta,
            mean: sum / n as f64,
            ranks: n,
        })
    };
    for (k, d) in curve.raw() {
        let bin = ((k as f64).log10() / delta + BIN_EPS).floor() as i64;
        current = match current {
            Some((i, sum, n)) if i == bin => Some((i, sum + d, n + 1)),
            Some(done) => {
                flush(&mut bins, done);
                Some((bin, d, 1))
            }
            None => Some((bin, d, 1)),
        };
    }
    if let Some(done) = current {
        flush(&mut bins, done);
    }
    curve.windowed = bins;
    curve.delta = Some(delta);
    Ok(curve)
}

/// Fitted cumulative Gaussian `d(k) ≈ Φ((log10 k - mu) / sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    pub mu: f64,
    pub sigma: f64,
    pub mse: f64,
    pub k_minus: f64,
    pub k_plus: f64,
}

impl SigmoidFit {
    pub fn new(mu: f64, sigma: f64, mse: f64) -> Self {
        Self {
            mu,
            sigma,
            mse,
            k_minus: 10f64.powf(mu - 2.0 * sigma),
            k_plus: 10f64.powf(mu + 2.0 * sigma),
        }
    }

    /// The fitted curve at `x = log10 k`.
    pub fn phi(&self, log10_k: f64) -> f64 {
        normal_cdf(log10_k, self.mu, self.sigma)
    }

    pub fn classify(&self, k: usize) -> Regime {
        classify_rank(k, self)
    }
}

fn windowed_mse(points: &[WindowedPoint], mu: f64, sigma: f64) -> f64 {
    points
        .iter()
        .map(|p| (normal_cdf(p.center, mu, sigma) - p.mean).powi(2))
        .sum::<f64>()
        / points.len() as f64
}

/// Least-squares fit of the cumulative Gaussian to the windowed curve.
pub fn fit_sigmoid(curve: &DiversityCurve) -> Result<SigmoidFit> {
    fit_sigmoid_points(&curve.windowed)
}

/// As [`fit_sigmoid`], on explicit `(center, mean)` points.
pub fn fit_sigmoid_points(points: &[WindowedPoint]) -> Result<SigmoidFit> {
    if points.len() < 3 {
        return Err(Error::domain(format!(
            "sigmoid fit needs at least 3 windowed bins, got {}",
            points.len()
        )));
    }
    let mu0 = points
        .iter()
        .find(|p| p.mean >= 0.5)
        .map(|p| p.center)
        .unwrap_or_else(|| 0.5 * (points[0].center + points[points.len() - 1].center));
    let sigma0: f64 = 0.5;
    let min = nelder_mead(
        "sigmoid fit",
        |x| windowed_mse(points, x[0], x[1].exp()),
        &[mu0, sigma0.ln()],
        &[0.25, 0.25],
        NelderMeadOptions {
            max_iterations: 10_000,
            f_tolerance: 1e-15,
            x_tolerance: 1e-9,
        },
    )?;
    Ok(SigmoidFit::new(min.x[0], min.x[1].exp(), min.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Head,
    Body,
    Tail,
}

/// Head for `k <= k-`, body for `k- < k <= k+`, tail beyond. The head is
/// empty whenever `k- < 1`.
pub fn classify_rank(k: usize, fit: &SigmoidFit) -> Regime {
    let k = k as f64;
    if k <= fit.k_minus {
        Regime::Head
    } else if k <= fit.k_plus {
        Regime::Body
    } else {
        Regime::Tail
    }
}

/// Full pipeline for one window: diversity, windowing, fit.
pub fn analyze_window(
    tables: &[RankTable],
    k_max: usize,
    delta: f64,
) -> Result<(DiversityCurve, SigmoidFit)> {
    let curve = log_window(rank_diversity(tables, k_max)?, delta)?;
    let fit = fit_sigmoid(&curve)?;
    Ok((curve, fit))
}

#[derive(Debug, Clone, Copy)]
pub struct EpochOptions {
    /// Slices per epoch.
    pub length: usize,
    /// Slices between the starts of consecutive epochs.
    pub stride: usize,
    pub k_max: usize,
    pub delta: f64,
}

#[derive(Debug)]
pub struct EpochFit {
    pub first: Slice,
    pub last: Slice,
    pub fit: Result<SigmoidFit>,
}

/// Fits every epoch of `length` consecutive tables. Failures are reported
/// per epoch and do not stop the others.
pub fn diversity_over_epochs(tables: &[RankTable], opts: EpochOptions) -> Result<Vec<EpochFit>> {
    if opts.length < 2 || opts.stride == 0 {
        return Err(Error::domain(
            "epoch length must be at least 2 and stride positive",
        ));
    }
    check_ordered(tables)?;
    if opts.length > tables.len() {
        return Ok(Vec::new());
    }
    let starts: Vec<usize> = (0..=tables.len() - opts.length)
        .step_by(opts.stride)
        .collect();
    Ok(starts
        .into_par_iter()
        .map(|s| {
            let epoch = &tables[s..s + opts.length];
            EpochFit {
                first: epoch[0].slice(),
                last: epoch[epoch.len() - 1].slice(),
                fit: analyze_window(epoch, opts.k_max, opts.delta).map(|(_, f)| f),
            }
        })
        .collect())
}

/// JSON fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub mu: f64,
    pub sigma: f64,
    pub mse: f64,
    pub k_minus: f64,
    pub k_plus: f64,
    #[serde(rename = "T")]
    pub t: usize,
    pub window: (Slice, Slice),
}

impl FitReport {
    pub fn new(curve: &DiversityCurve, fit: &SigmoidFit) -> Self {
        Self {
            mu: fit.mu,
            sigma: fit.sigma,
            mse: fit.mse,
            k_minus: fit.k_minus,
            k_plus: fit.k_plus,
            t: curve.t,
            window: curve.window,
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::rank::SeriesBuilder;

    /// Independent oracle: the set of tokens at each rank, by text.
    pub(crate) fn brute_force_diversity(tables: &[RankTable], k_max: usize) -> Vec<f64> {
        (1..=k_max)
            .map(|k| {
                let set: HashSet<&str> = tables.iter().map(|t| t.token(k)).collect();
                set.len() as f64 / tables.len() as f64
            })
            .collect()
    }

    fn series(slices: &[&[&str]]) -> Vec<RankTable> {
        let mut b = SeriesBuilder::new();
        for (i, toks) in slices.iter().enumerate() {
            b.push_ranked(i as Slice, toks, None);
        }
        b.try_finish().unwrap()
    }

    fn synthetic_points(mu: f64, sigma: f64) -> Vec<WindowedPoint> {
        (0..50)
            .map(|i| {
                let c = (i as f64 + 0.5) * 0.1;
                WindowedPoint {
                    center: c,
                    mean: normal_cdf(c, mu, sigma),
                    ranks: 1,
                }
            })
            .collect()
    }

    #[test]
    fn stable_head_has_minimal_diversity() {
        let s = series(&[
            &["the", "of", "a"],
            &["the", "a", "of"],
            &["the", "of", "to"],
        ]);
        let c = rank_diversity(&s, 3).unwrap();
        assert_eq!(c.d(1), 1.0 / 3.0);
        assert_eq!(c.d(2), 2.0 / 3.0);
        assert_eq!(c.d(3), 1.0);
    }

    #[test]
    fn maximal_diversity() {
        let s = series(&[&["a"], &["b"], &["c"], &["d"]]);
        assert_eq!(rank_diversity(&s, 1).unwrap().d(1), 1.0);
    }

    #[test]
    fn preconditions() {
        let s = series(&[&["a", "b"], &["b"]]);
        let err = rank_diversity(&s, 2).unwrap_err().to_string();
        assert!(err.contains("slice 1"), "{err}");
        assert!(rank_diversity(&s[..1], 1).is_err());
        assert!(rank_diversity(&s, 0).is_err());
    }

    #[test]
    fn mixed_vocabularies_are_aligned_by_text() {
        let a = RankTable::from_ranked(1, &["x", "y"], None).unwrap();
        let b = RankTable::from_ranked(2, &["x", "z"], None).unwrap();
        let c = rank_diversity(&[a, b], 2).unwrap();
        assert_eq!(c.distinct, vec![1, 2]);
    }

    #[test]
    fn five_slice_random_corpus_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut b = SeriesBuilder::new();
            for s in 0..5 {
                let mut toks: Vec<String> = (0..40).map(|i| format!("t{i}")).collect();
                for i in (1..toks.len()).rev() {
                    let j = rng.random_range(0..=i);
                    toks.swap(i, j);
                }
                b.push_ranked(s, &toks, None);
            }
            let tables = b.try_finish().unwrap();
            let c = rank_diversity(&tables, 40).unwrap();
            let oracle = brute_force_diversity(&tables, 40);
            for (k, d) in c.raw() {
                assert_eq!(d, oracle[k - 1]);
            }
        }
    }

    #[test]
    fn windowing_single_rank() {
        let s = series(&[&["a"], &["b"]]);
        let c = log_window(rank_diversity(&s, 1).unwrap(), 0.1).unwrap();
        assert_eq!(c.windowed.len(), 1);
        assert!((c.windowed[0].center - 0.05).abs() < 1e-15);
        assert_eq!(c.windowed[0].mean, 1.0);
    }

    #[test]
    fn windowing_matches_threshold_oracle() {
        // d(k) = k/10 for k = 1..10 on T = 10 slices
        let curve = DiversityCurve {
            window: (0, 9),
            t: 10,
            distinct: (1..=10).collect(),
            windowed: vec![],
            delta: None,
        };
        let w = log_window(curve, 0.1).unwrap();
        // Oracle: k lies in bin i iff 10^(i/10) <= k < 10^((i+1)/10), tested by
        // comparing k^10 against powers of ten in exact integer arithmetic.
        let bin_of = |k: u128| {
            (0..=10u32)
                .rev()
                .find(|&i| k.pow(10) >= 10u128.pow(i))
                .unwrap()
        };
        let mut expected: Vec<(u32, Vec<f64>)> = Vec::new();
        for k in 1..=10u128 {
            let i = bin_of(k);
            match expected.last_mut() {
                Some((j, v)) if *j == i => v.push(k as f64 / 10.0),
                _ => expected.push((i, vec![k as f64 / 10.0])),
            }
        }
        assert_eq!(w.windowed.len(), expected.len());
        for (p, (i, vals)) in w.windowed.iter().zip(&expected) {
            assert!((p.center - (*i as f64 + 0.5) * 0.1).abs() < 1e-12);
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!(
                (p.mean - mean).abs() < 1e-15,
                "bin {i}: {} vs {mean}",
                p.mean
            );
        }
        // bins 0, 3, 4, 6, 7, 8, 9, 10 are populated
        assert_eq!(
            expected.iter().map(|e| e.0).collect::<Vec<_>>(),
            vec![0, 3, 4, 6, 7, 8, 9, 10]
        );
    }

    #[test]
    fn windowing_constant_curve() {
        let curve = DiversityCurve {
            window: (0, 3),
            t: 4,
            distinct: vec![2; 500],
            windowed: vec![],
            delta: None,
        };
        let w = log_window(curve, 0.1).unwrap();
        assert!(w.windowed.iter().all(|p| p.mean == 0.5));
        assert_eq!(w.windowed.iter().map(|p| p.ranks).sum::<usize>(), 500);
    }

    #[test]
    fn bad_delta() {
        let curve = DiversityCurve {
            window: (0, 1),
            t: 2,
            distinct: vec![1],
            windowed: vec![],
            delta: None,
        };
        assert!(log_window(curve.clone(), 0.0).is_err());
        assert!(log_window(curve, f64::NAN).is_err());
    }

    #[test]
    fn noiseless_fit_recovers_parameters() {
        let f = fit_sigmoid_points(&synthetic_points(1.8, 0.5)).unwrap();
        assert!((f.mu - 1.8).abs() < 1e-6, "{f:?}");
        assert!((f.sigma - 0.5).abs() < 1e-6, "{f:?}");
        assert!(f.mse < 1e-12);
    }

    #[test]
    fn noisy_fit_recovers_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = synthetic_points(2.0, 0.45);
        for p in &mut pts {
            p.mean += rng.random_range(-0.02..=0.02);
        }
        let f = fit_sigmoid_points(&pts).unwrap();
        assert!(
            (f.mu - 2.0).abs() < 0.05 && (f.sigma - 0.45).abs() < 0.05,
            "{f:?}"
        );
    }

    #[test]
    fn fit_is_locally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pts = synthetic_points(1.5, 0.6);
        for p in &mut pts {
            p.mean += rng.random_range(-0.05..=0.05);
        }
        let f = fit_sigmoid_points(&pts).unwrap();
        for (dm, ds) in [(1.01, 1.0), (0.99, 1.0), (1.0, 1.01), (1.0, 0.99)] {
            assert!(windowed_mse(&pts, f.mu * dm, f.sigma * ds) >= f.mse);
        }
    }

    #[test]
    fn too_few_bins() {
        assert!(fit_sigmoid_points(&synthetic_points(1.0, 0.5)[..2]).is_err());
    }

    #[test]
    fn regimes() {
        let chess = SigmoidFit::new(1.24, 0.76, 0.0);
        assert!(chess.mu - 2.0 * chess.sigma < 0.0);
        assert_eq!(classify_rank(1, &chess), Regime::Body);
        let f = SigmoidFit::new(1.9, 0.5, 0.0);
        assert_eq!(classify_rank(1, &f), Regime::Head);
        assert_eq!(
            classify_rank(f.k_plus.round() as usize + 1, &f),
            Regime::Tail
        );
        assert_eq!(classify_rank(f.k_minus.ceil() as usize, &f), Regime::Body);
        assert_eq!(classify_rank(f.k_plus.floor() as usize, &f), Regime::Body);
    }

    #[test]
    fn epochs() {
        // stationary corpus: identical tables in every slice plus a rotating tail
        let mut b = SeriesBuilder::new();
        for s in 0..12 {
            let mut toks: Vec<String> = (0..300).map(|i| format!("w{i}")).collect();
            let tail = toks.split_off(100);
            let rot = (s as usize * 37) % tail.len();
            toks.extend(tail[rot..].iter().cloned());
            toks.extend(tail[..rot].iter().cloned());
            b.push_ranked(s, &toks, None);
        }
        let tables = b.try_finish().unwrap();
        let opts = EpochOptions {
            length: 4,
            stride: 4,
            k_max: 300,
            delta: 0.1,
        };
        let fits = diversity_over_epochs(&tables, opts).unwrap();
        assert_eq!(fits.len(), 3);
        let first = fits[0].fit.as_ref().unwrap();
        for e in &fits {
            let f = e.fit.as_ref().unwrap();
            assert!((f.mu - first.mu).abs() < 1e-9 && (f.sigma - first.sigma).abs() < 1e-9);
        }
        let long = EpochOptions { length: 13, ..opts };
        assert!(diversity_over_epochs(&tables, long).unwrap().is_empty());
        let sliding = EpochOptions { stride: 1, ..opts };
        assert_eq!(diversity_over_epochs(&tables, sliding).unwrap().len(), 9);
    }

    #[test]
    fn epoch_failures_do_not_abort_others() {
        let mut b = SeriesBuilder::new();
        for s in 0..4 {
            // the last epoch has too few ranks for the requested k_max
            let n = if s < 2 { 50 } else { 5 };
            let toks: Vec<String> = (0..n)
                .map(|i| format!("w{}", (i * (s as usize + 1)) % 97))
                .collect();
            b.push_ranked(s, &toks, None);
        }
        let tables = b.try_finish().unwrap();
        let fits = diversity_over_epochs(
            &tables,
            EpochOptions {
                length: 2,
                stride: 2,
                k_max: 50,
                delta: 0.1,
            },
        )
        .unwrap();
        assert_eq!(fits.len(), 2);
        assert!(fits[0].fit.is_ok());
        assert!(fits[1].fit.is_err());
    }

    proptest! {
        #[test]
        fn kpm_identities(mu in 0.0f64..4.0, sigma in 0.01f64..2.0) {
            let f = SigmoidFit::new(mu, sigma, 0.0);
            prop_assert!(f.k_minus < f.k_plus);
            prop_assert!(((f.k_plus.log10() - f.k_minus.log10()) - 4.0 * sigma).abs() < 1e-12);
            prop_assert!(((f.k_minus * f.k_plus).log10() - 2.0 * mu).abs() < 1e-12);
        }

        #[test]
        fn raw_diversity_is_bounded(seed in any::<u64>(), t in 2usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b = SeriesBuilder::new();
            for s in 0..t {
                let toks: Vec<String> = (0..30).map(|_| format!("w{}", rng.random_range(0..1000))).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
                b.push_ranked(s as Slice, &toks, None);
            }
            let tables = b.try_finish().unwrap();
            let k_max = tables.iter().map(|t| t.len()).min().unwrap();
            let c = rank_diversity(&tables, k_max).unwrap();
            for (k, d) in c.raw() {
                prop_assert!(d >= 1.0 / t as f64 && d <= 1.0);
                prop_assert!(c.distinct[k - 1] >= 1 && c.distinct[k - 1] as usize <= t);
            }
        }

        #[test]
        fn phi_is_monotone(mu in 0.5f64..3.0, sigma in 0.1f64..1.0) {
            let f = SigmoidFit::new(mu, sigma, 0.0);
            let mut prev = 0.0;
            for k in 1..2000 {
                let v = f.phi((k as f64).log10());
                prop_assert!(v >= prev && (0.0..=1.0).contains(&v));
                prev = v;
            }
        }
    }
}

//! Flight statistics: relative rank changes `(k_{t+1} - k_t) / k_t`, their
//! histograms and fitted densities, the modal per-token flight width, and
//! time autocorrelation of normalized flights.
//!
//! Two slices are consecutive when their slice indices differ by exactly one;
//! a token absent from a slice breaks its trajectory into segments and no
//! flight spans the gap.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Slice;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rank::{aligned_ids, check_ordered, rank_index, RankTable, RankTrajectory, TokenId};

/// Bin width used to locate the modal flight standard deviation.
pub const SIGMA_HAT_BIN: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct FlightSeries {
    pub token: String,
    pub flights: Vec<f64>,
}

/// Flights of one trajectory, one per pair of consecutive slices where the
/// token is present in both.
pub fn flights(traj: &RankTrajectory) -> FlightSeries {
    let flights = traj
        .points
        .windows(2)
        .filter(|w| w[1].0 - w[0].0 == 1)
        .map(|w| relative_change(w[0].1, w[1].1))
        .collect();
    FlightSeries {
        token: traj.token.clone(),
        flights,
    }
}

fn relative_change(from: u32, to: u32) -> f64 {
    (to as f64 - from as f64) / from as f64
}

/// Flights standardized to zero mean and unit mean square.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFlightSeries {
    pub token: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
}

impl NormalizedFlightSeries {
    /// `(flights - mean) / stddev`, with the population standard deviation,
    /// so that the mean of `d_t^2` is exactly one.
    pub fn new(series: &FlightSeries) -> Result<Self> {
        let x = &series.flights;
        if x.len() < 2 {
            return Err(Error::domain(format!(
                "token {:?} has {} flights; normalization needs at least 2",
                series.token,
                x.len()
            )));
        }
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let stddev = var.sqrt();
        if stddev == 0.0 || !stddev.is_finite() {
            return Err(Error::domain(format!(
                "token {:?} has constant flights; zero variance cannot be normalized",
                series.token
            )));
        }
        Ok(Self {
            token: series.token.clone(),
            values: x.iter().map(|v| (v - mean) / stddev).collect(),
            mean,
            stddev,
        })
    }

    /// Recovers the original flights.
    pub fn denormalize(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|d| d * self.stddev + self.mean)
            .collect()
    }
}

/// Time correlation `C_tau` of a normalized series for `tau = 0..=tau_max`.
///
/// The lagged product sum is divided by the root of the two overlapping
/// segments' sums of squares, so `C_0 = 1`, `|C_tau| <= 1`, and for long
/// series it matches the plain time average of `d_t d_{t+tau}`.
pub fn autocorrelation(series: &NormalizedFlightSeries, tau_max: usize) -> Result<Vec<f64>> {
    let d = &series.values;
    if d.len() <= tau_max {
        return Err(Error::domain(format!(
            "series of length {} too short for tau_max = {tau_max}",
            d.len()
        )));
    }
    Ok((0..=tau_max)
        .map(|tau| {
            let n = d.len() - tau;
            let head = &d[..n];
            let tail = &d[tau..];
            let cross: f64 = head.iter().zip(tail).map(|(a, b)| a * b).sum();
            let norm = (head.iter().map(|v| v * v).sum::<f64>()
                * tail.iter().map(|v| v * v).sum::<f64>())
            .sqrt();
            if norm == 0.0 {
                0.0
            } else {
                (cross / norm).clamp(-1.0, 1.0)
            }
        })
        .collect())
}

/// Density histogram of flights of tokens starting in a rank band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightHistogram {
    /// Inclusive band of initial ranks.
    pub band: (u32, u32),
    pub binwidth: f64,
    /// Non-empty bins as `(center, density)`, ascending by center. Bin `i`
    /// covers `[(i - 1/2) w, (i + 1/2) w)` and is centered on `i w`.
    pub bins: Vec<(f64, f64)>,
    pub sample_count: usize,
}

impl FlightHistogram {
    pub fn from_samples(samples: &[f64], band: (u32, u32), binwidth: f64) -> Result<Self> {
        if !(binwidth > 0.0 && binwidth.is_finite()) {
            return Err(Error::domain(format!(
                "bin width must be positive, got {binwidth}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::domain(format!(
                "no flights start in ranks {}..={}",
                band.0, band.1
            )));
        }
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for &x in samples {
            *counts.entry((x / binwidth).round() as i64).or_default() += 1;
        }
        let norm = samples.len() as f64 * binwidth;
        Ok(Self {
            band,
            binwidth,
            bins: counts
                .into_iter()
                .map(|(i, c)| (i as f64 * binwidth, c as f64 / norm))
                .collect(),
            sample_count: samples.len(),
        })
    }

    /// Pointwise mean of several histograms with the same bin width; a bin
    /// missing from one histogram counts as zero density there.
    pub fn average(hists: &[FlightHistogram]) -> Result<Self> {
        let first = hists
            .first()
            .ok_or_else(|| Error::domain("no histograms to average"))?;
        let w = first.binwidth;
        if hists.iter().any(|h| h.binwidth != w) {
            return Err(Error::domain("histograms differ in bin width"));
        }
        let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
        for h in hists {
            for &(c, d) in &h.bins {
                *acc.entry((c / w).round() as i64).or_default() += d;
            }
        }
        let n = hists.len() as f64;
        Ok(Self {
            band: (
                hists.iter().map(|h| h.band.0).min().unwrap_or(0),
                hists.iter().map(|h| h.band.1).max().unwrap_or(0),
            ),
            binwidth: w,
            bins: acc
                .into_iter()
                .map(|(i, d)| (i as f64 * w, d / n))
                .collect(),
            sample_count: hists.iter().map(|h| h.sample_count).sum(),
        })
    }

    /// Total probability mass, `sum(density) * binwidth`.
    pub fn mass(&self) -> f64 {
        self.bins.iter().map(|b| b.1).sum::<f64>() * self.binwidth
    }

    /// Writes `bin_center,density`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_center,density")?;
        for (c, d) in &self.bins {
            writeln!(w, "{c},{d}")?;
        }
        w.flush()
    }
}

/// For each pair of consecutive slices, calls `f(rank_t, rank_t1, id)` for
/// every token present in both.
fn for_each_flight(tables: &[RankTable], mut f: impl FnMut(u32, u32, TokenId)) -> Result<()> {
    check_ordered(tables)?;
    let (ids, vocab_len) = aligned_ids(tables);
    let mut next_index: Option<Vec<u32>> = None;
    for i in (0..tables.len().saturating_sub(1)).rev() {
        if tables[i + 1].slice() - tables[i].slice() != 1 {
            next_index = None;
            continue;
        }
        let index = next_index
            .take()
            .unwrap_or_else(|| rank_index(&ids[i + 1], vocab_len));
        for (pos, &id) in ids[i].iter().enumerate() {
            let to = index[id as usize];
            if to != 0 {
                f(pos as u32 + 1, to, id);
            }
        }
        next_index = Some(rank_index(&ids[i], vocab_len));
    }
    Ok(())
}

/// Flights of every token whose rank at the earlier slice lies in `band`.
pub fn band_flights(tables: &[RankTable], band: (u32, u32)) -> Result<Vec<f64>> {
    if band.0 == 0 || band.0 > band.1 {
        return Err(Error::domain(format!(
            "invalid rank band {}..={}",
            band.0, band.1
        )));
    }
    let mut out = Vec::new();
    for_each_flight(tables, |from, to, _| {
        if (band.0..=band.1).contains(&from) {
            out.push(relative_change(from, to));
        }
    })?;
    Ok(out)
}

pub fn flight_histogram(
    tables: &[RankTable],
    band: (u32, u32),
    binwidth: f64,
) -> Result<FlightHistogram> {
    if let Some(t) = tables.iter().find(|t| (t.len() as u32) < band.1) {
        return Err(Error::domain(format!(
            "band {}..={} exceeds the {} ranks of slice {}",
            band.0,
            band.1,
            t.len(),
            t.slice()
        )));
    }
    FlightHistogram::from_samples(&band_flights(tables, band)?, band, binwidth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Lorentzian,
}

impl Family {
    pub fn density(self, x: f64, location: f64, scale: f64) -> f64 {
        let u = x - location;
        match self {
            Family::Gaussian => {
                (-(u * u) / (2.0 * scale * scale)).exp() / (scale * (2.0 * PI).sqrt())
            }
            Family::Lorentzian => scale / (PI * (u * u + scale * scale)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionFit {
    pub family: Family,
    pub location: f64,
    /// Standard deviation for the Gaussian, half width at half maximum for the Lorentzian.
    pub scale: f64,
    /// Sum of squared density residuals over the histogram bins.
    pub sse: f64,
}

/// Least-squares fit of a density curve to the histogram bins.
pub fn fit_flight_distribution(hist: &FlightHistogram, family: Family) -> Result<DistributionFit> {
    let bins = &hist.bins;
    if bins.iter().filter(|b| b.1 > 0.0).count() < 5 {
        return Err(Error::domain(
            "distribution fit needs at least 5 non-empty bins",
        ));
    }
    let mass: f64 = bins.iter().map(|b| b.1).sum();
    let mean = bins.iter().map(|(c, d)| c * d).sum::<f64>() / mass;
    let var = bins
        .iter()
        .map(|(c, d)| (c - mean).powi(2) * d)
        .sum::<f64>()
        / mass;
    // the modal bin is a robust start for heavy-tailed data
    let peak = bins
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(mean, |b| b.0);
    let scale0 = match family {
        Family::Gaussian => var.sqrt().max(hist.binwidth),
        // for a Lorentzian the peak density is 1 / (pi * gamma)
        Family::Lorentzian => {
            let top = bins.iter().map(|b| b.1).fold(0.0, f64::max);
            (1.0 / (PI * top)).max(hist.binwidth / 2.0)
        }
    };
    // tolerance relative to the squared densities, which set the rounding floor of the SSE
    let scale_sq: f64 = bins.iter().map(|b| b.1 * b.1).sum();
    let sse = |loc: f64, scale: f64| {
        bins.iter()
            .map(|&(c, d)| (d - family.density(c, loc, scale)).powi(2))
            .sum::<f64>()
    };
    let min = nelder_mead(
        "flight distribution fit",
        |x| sse(x[0], x[1].exp()),
        &[peak, scale0.ln()],
        &[scale0 * 0.5, 0.3],
        NelderMeadOptions {
            max_iterations: 10_000,
            f_tolerance: 1e-14 * scale_sq,
            x_tolerance: 1e-10,
        },
    )?;
    Ok(DistributionFit {
        family,
        location: min.x[0],
        scale: min.x[1].exp(),
        sse: min.value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaHat {
    /// Center of the modal bin of per-token flight standard deviations.
    pub value: f64,
    /// Number of tokens that contributed a standard deviation.
    pub tokens: usize,
    /// True when every contributing token was frozen in rank.
    pub degenerate: bool,
}

/// Most common per-token standard deviation of flights.
///
/// Tokens need at least 2 flights and an initial rank (rank at their first
/// slice) of at most `k_max`. The sample standard deviation (`n - 1`) of each
/// token's flights is binned into `[i w, (i + 1) w)` with `w = 0.005`; the
/// center of the fullest bin is returned, ties going to the lower bin.
pub fn sigma_hat(tables: &[RankTable], k_max: usize) -> Result<SigmaHat> {
    if tables.len() < 3 {
        return Err(Error::domain(format!(
            "sigma_hat needs at least 3 slices, got {}",
            tables.len()
        )));
    }
    let (ids, vocab_len) = aligned_ids(tables);
    let mut first_rank = vec![0u32; vocab_len];
    for table in ids.iter() {
        for (pos, &id) in table.iter().enumerate() {
            let r = &mut first_rank[id as usize];
            if *r == 0 {
                *r = pos as u32 + 1;
            }
        }
    }
    // Welford accumulators per token
    let mut n = vec![0u32; vocab_len];
    let mut mean = vec![0f64; vocab_len];
    let mut m2 = vec![0f64; vocab_len];
    for_each_flight(tables, |from, to, id| {
        let i = id as usize;
        if first_rank[i] as usize > k_max {
            return;
        }
        let x = relative_change(from, to);
        n[i] += 1;
        let delta = x - mean[i];
        mean[i] += delta / n[i] as f64;
        m2[i] += delta * (x - mean[i]);
    })?;
    let stds: Vec<f64> = (0..vocab_len)
        .filter(|&i| n[i] >= 2)
        .map(|i| (m2[i] / (n[i] - 1) as f64).max(0.0).sqrt())
        .collect();
    if stds.is_empty() {
        return Err(Error::domain(format!(
            "no token with at least 2 flights and initial rank <= {k_max}"
        )));
    }
    if stds.iter().all(|&s| s == 0.0) {
        warn!(
            "all {} tokens are frozen in rank; sigma_hat is degenerate",
            stds.len()
        );
        return Ok(SigmaHat {
            value: 0.0,
            tokens: stds.len(),
            degenerate: true,
        });
    }
    Ok(SigmaHat {
        value: modal_bin_center(&stds, SIGMA_HAT_BIN),
        tokens: stds.len(),
        degenerate: false,
    })
}

/// Center of the fullest `[i w, (i + 1) w)` bin; ties go to the lower bin.
pub fn modal_bin_center(values: &[f64], width: f64) -> f64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry((v / width).floor() as i64).or_default() += 1;
    }
    // BTreeMap iterates ascending, and `max_by_key` keeps the last maximum,
    // so scan in reverse to keep the lowest bin on ties.
    let (bin, _) = counts
        .iter()
        .rev()
        .max_by_key(|(_, &c)| c)
        .expect("non-empty");
    (*bin as f64 + 0.5) * width
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedCorrelation {
    /// Mean `C_tau` for `tau = 0..=tau_max`.
    pub c: Vec<f64>,
    /// Sampled tokens with their rank in the first slice.
    pub sample: Vec<(String, u32)>,
}

impl AveragedCorrelation {
    /// Writes `tau,C`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tau,C")?;
        for (tau, c) in self.c.iter().enumerate() {
            writeln!(w, "{tau},{c}")?;
        }
        w.flush()
    }
}

/// Ranks of each token of `wanted` in every table (0 where absent), in one pass.
fn trajectories_for(
    ids: &[std::borrow::Cow<'_, [TokenId]>],
    vocab_len: usize,
    wanted: &[TokenId],
) -> Vec<Vec<u32>> {
    let mut slot = vec![u32::MAX; vocab_len];
    for (j, &id) in wanted.iter().enumerate() {
        slot[id as usize] = j as u32;
    }
    let mut out = vec![vec![0u32; ids.len()]; wanted.len()];
    for (t, table) in ids.iter().enumerate() {
        for (pos, &id) in table.iter().enumerate() {
            let j = slot[id as usize];
            if j != u32::MAX {
                out[j as usize][t] = pos as u32 + 1;
            }
        }
    }
    out
}

/// Mean `C_tau` over `sample_size` tokens drawn at random ranks of the first slice.
///
/// Eligible tokens are present in every slice (slices must be consecutive)
/// and have non-constant flights. Ranks of the first slice are visited in a
/// seeded random order and the first `sample_size` eligible tokens are kept,
/// which is uniform sampling without replacement among eligible ranks.
pub fn averaged_correlation(
    tables: &[RankTable],
    sample_size: usize,
    tau_max: usize,
    seed: u64,
) -> Result<AveragedCorrelation> {
    check_ordered(tables)?;
    if sample_size == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    if tables.len() < tau_max + 3 {
        return Err(Error::domain(format!(
            "{} slices give too few flights for tau_max = {tau_max}",
            tables.len()
        )));
    }
    if let Some(w) = tables.windows(2).find(|w| w[1].slice() - w[0].slice() != 1) {
        return Err(Error::domain(format!(
            "slices {} and {} are not consecutive",
            w[0].slice(),
            w[1].slice()
        )));
    }
    let (ids, vocab_len) = aligned_ids(tables);
    let mut present = vec![0u32; vocab_len];
    for table in &ids {
        for &id in table.iter() {
            present[id as usize] += 1;
        }
    }
    let t = tables.len() as u32;
    let mut candidates: Vec<u32> = ids[0]
        .iter()
        .enumerate()
        .filter(|(_, &id)| present[id as usize] == t)
        .map(|(pos, _)| pos as u32 + 1)
        .collect();
    let full = candidates.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);

    let mut sample = Vec::new();
    let mut sum = vec![0.0; tau_max + 1];
    let mut degenerate = 0usize;
    for batch in candidates.chunks(sample_size.max(64)) {
        let wanted: Vec<TokenId> = batch.iter().map(|&k| ids[0][k as usize - 1]).collect();
        let trajs = trajectories_for(&ids, vocab_len, &wanted);
        for (&k, ranks) in batch.iter().zip(trajs) {
            let token = tables[0].token(k as usize).to_string();
            let series = FlightSeries {
                token: token.clone(),
                flights: ranks
                    .windows(2)
                    .map(|w| relative_change(w[0], w[1]))
                    .collect(),
            };
            let Ok(norm) = NormalizedFlightSeries::new(&series) else {
                degenerate += 1;
                continue;
            };
            for (s, c) in sum.iter_mut().zip(autocorrelation(&norm, tau_max)?) {
                *s += c;
            }
            sample.push((token, k));
            if sample.len() == sample_size {
                let n = sample_size as f64;
                return Ok(AveragedCorrelation {
                    c: sum.into_iter().map(|s| s / n).collect(),
                    sample,
                });
            }
        }
    }
    Err(Error::domain(format!(
        "only {} eligible tokens ({full} present in all {t} slices, {degenerate} frozen); {sample_size} requested",
        sample.len()
    )))
}

/// Flights of one trajectory with its first slice, for exports.
pub fn flights_with_slices(traj: &RankTrajectory) -> Vec<(Slice, f64)> {
    traj.points
        .windows(2)
        .filter(|w| w[1].0 - w[0].0 == 1)
        .map(|w| (w[0].0, relative_change(w[0].1, w[1].1)))
        .collect()
}

//! Scale-invariant Gaussian random walk over ranks.
//!
//! Every step, the item at rank `k` draws an auxiliary position
//! `s = k + Normal(0, k * sigma_hat)`; sorting all items by `s` (ties by the
//! previous rank) yields the next ranking. Low ranks barely move, high ranks
//! move proportionally more, which reproduces the sigmoid shape of `d(k)`.
//!
//! The random source is the [`NoiseSource`] trait. The default,
//! [`SeededNoise`], is ChaCha8 seeded from a `u64` with standard normals drawn
//! by the Ziggurat method of `rand_distr`; both are platform independent, so
//! a seed pins down a run bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diversity::{DiversityCurve, SigmoidFit};
use crate::error::{Error, Result};
use crate::ingest::Slice;
use crate::rank::{RankTable, SeriesBuilder, TokenId};
use crate::special::std_normal_cdf;

/// Steps discarded before the first recorded table.
pub const DEFAULT_BURN_IN: usize = 50;

pub trait NoiseSource {
    /// Next standard normal deviate.
    fn standard_normal(&mut self) -> f64;
}

#[derive(Debug, Clone)]
pub struct SeededNoise(ChaCha8Rng);

impl SeededNoise {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl NoiseSource for SeededNoise {
    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }
}

impl<F: FnMut() -> f64> NoiseSource for F {
    fn standard_normal(&mut self) -> f64 {
        self()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub n_items: usize,
    /// Number of recorded tables.
    pub n_steps: usize,
    pub sigma_hat: f64,
    pub seed: u64,
    pub burn_in: usize,
}

impl WalkConfig {
    pub fn new(n_items: usize, n_steps: usize, sigma_hat: f64, seed: u64) -> Self {
        Self {
            n_items,
            n_steps,
            sigma_hat,
            seed,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_items < 2 || self.n_steps < 2 {
            return Err(Error::domain(format!(
                "walk needs at least 2 items and 2 steps (got {} items, {} steps)",
                self.n_items, self.n_steps
            )));
        }
        if self.n_items > u32::MAX as usize {
            return Err(Error::domain("too many items"));
        }
        if !(self.sigma_hat.is_finite() && self.sigma_hat >= 0.0) {
            return Err(Error::domain(format!(
                "sigma_hat must be non-negative, got {}",
                self.sigma_hat
            )));
        }
        Ok(())
    }
}

/// A ranking of items `0..n`: `order[k - 1]` is the item holding rank `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkState {
    order: Vec<u32>,
    step: usize,
}

impl WalkState {
    /// Item `i` at rank `i + 1`.
    pub fn identity(n_items: usize) -> Self {
        Self {
            order: (0..n_items as u32).collect(),
            step: 0,
        }
    }

    pub fn from_order(order: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &item in &order {
            let slot = seen
                .get_mut(item as usize)
                .ok_or_else(|| Error::domain(format!("item {item} out of range")))?;
            if std::mem::replace(slot, true) {
                return Err(Error::domain(format!("item {item} ranked twice")));
            }
        }
        Ok(Self { order, step: 0 })
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `ranks()[item]` is the 1-based rank of `item`.
    pub fn ranks(&self) -> Vec<u32> {
        let mut r = vec![0; self.order.len()];
        for (i, &item) in self.order.iter().enumerate() {
            r[item as usize] = i as u32 + 1;
        }
        r
    }
}

/// Auxiliary positions `s = k + k * sigma_hat * z`, indexed by current rank
/// minus one. Draws are taken in rank order.
pub fn proposals(state: &WalkState, sigma_hat: f64, noise: &mut impl NoiseSource) -> Vec<f64> {
    (1..=state.len())
        .map(|k| {
            let k = k as f64;
            k + k * sigma_hat * noise.standard_normal()
        })
        .collect()
}

/// Re-ranks by ascending proposal; equal proposals keep their previous order.
pub fn rerank(state: &WalkState, proposals: &[f64]) -> WalkState {
    assert_eq!(proposals.len(), state.len());
    let mut idx: Vec<u32> = (0..state.len() as u32).collect();
    // stable sort on the previous-rank order breaks ties by previous rank
    idx.sort_by(|&a, &b| proposals[a as usize].total_cmp(&proposals[b as usize]));
    WalkState {
        order: idx.iter().map(|&i| state.order[i as usize]).collect(),
        step: state.step + 1,
    }
}

/// One step of the walk.
pub fn step(state: &WalkState, sigma_hat: f64, noise: &mut impl NoiseSource) -> WalkState {
    let s = proposals(state, sigma_hat, noise);
    rerank(state, &s)
}

/// Name of synthetic item `i` (0-based): `w000001`, `w000002`, ...
pub fn item_name(i: usize, width: usize) -> String {
    format!("w{:0width$}", i + 1)
}

fn name_width(n_items: usize) -> usize {
    n_items.to_string().len().max(6)
}

/// Runs the walk from the identity ranking, discards `burn_in` steps and
/// records `n_steps` tables with slices `1..=n_steps`.
pub fn simulate(config: &WalkConfig) -> Result<Vec<RankTable>> {
    simulate_with_noise(config, &mut SeededNoise::new(config.seed))
}

pub fn simulate_with_noise(
    config: &WalkConfig,
    noise: &mut impl NoiseSource,
) -> Result<Vec<RankTable>> {
    config.validate()?;
    let mut builder = SeriesBuilder::new();
    let width = name_width(config.n_items);
    let ids: Vec<TokenId> = (0..config.n_items)
        .map(|i| builder.vocabulary_mut().intern(&item_name(i, width)))
        .collect();
    let mut state = WalkState::identity(config.n_items);
    for _ in 0..config.burn_in {
        state = step(&state, config.sigma_hat, noise);
    }
    for t in 0..config.n_steps {
        if t > 0 {
            state = step(&state, config.sigma_hat, noise);
        }
        let row = state.order.iter().map(|&item| ids[item as usize]).collect();
        builder.push_ids(t as Slice + 1, row, None);
    }
    builder.try_finish()
}

/// Windowed diversity on the standardized axis `z = (log10 k - mu) / sigma`.
pub fn normalized_diversity(curve: &DiversityCurve, fit: &SigmoidFit) -> Vec<(f64, f64)> {
    curve
        .windowed
        .iter()
        .map(|p| ((p.center - fit.mu) / fit.sigma, p.mean))
        .collect()
}

/// Largest `|d(z) - Φ(z)|` over points with `z` in `[z_lo, z_hi]`.
pub fn max_deviation_from_standard(points: &[(f64, f64)], z_lo: f64, z_hi: f64) -> Option<f64> {
    points
        .iter()
        .filter(|(z, _)| (z_lo..=z_hi).contains(z))
        .map(|&(z, d)| (d - std_normal_cdf(z)).abs())
        .reduce(f64::max)
}

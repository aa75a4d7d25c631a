//! Rank-frequency models: plain Zipf (m1), Zipf with exponential decay (m2),
//! Zipf with a finite-size factor (m3), both corrections together (m4), and
//! the double Zipf law (m5). Each model is normalized over ranks `1..=N̄`
//! and fitted by minimizing Pearson's χ².

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, BoxMap, Minimum, NelderMeadOptions};
use crate::rank::RankTable;
use crate::special::ln_gamma_q;

pub const A_MIN: f64 = 1e-6;
pub const A_MAX: f64 = 4.0;
pub const B_MAX: f64 = 1.0;
pub const ALPHA_MAX: f64 = 10.0;
pub const MULTI_STARTS: usize = 8;
/// Points of the log-spaced crossover grid scanned before integer refinement.
pub const KC_GRID: usize = 40;

const A_BOX: BoxMap = BoxMap {
    lo: A_MIN,
    hi: A_MAX,
};
const B_BOX: BoxMap = BoxMap { lo: 0.0, hi: B_MAX };
const ALPHA_BOX: BoxMap = BoxMap {
    lo: 0.0,
    hi: ALPHA_MAX,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZipfFamily {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl ZipfFamily {
    pub const ALL: [ZipfFamily; 5] = [Self::M1, Self::M2, Self::M3, Self::M4, Self::M5];

    /// Number of fitted parameters, counting the crossover rank of m5.
    pub fn free_params(self) -> usize {
        match self {
            Self::M1 => 1,
            Self::M2 | Self::M3 | Self::M5 => 2,
            Self::M4 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::M1 => "m1",
            Self::M2 => "m2",
            Self::M3 => "m3",
            Self::M4 => "m4",
            Self::M5 => "m5",
        }
    }
}

impl fmt::Display for ZipfFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ZipfFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown model family {s:?}; expected m1..m5")))
    }
}

/// Family and parameters of one model. Parameters a family does not use are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfModelSpec {
    pub family: ZipfFamily,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub k_c: u32,
    pub n_bar: u32,
}

impl ZipfModelSpec {
    pub fn m1(a: f64, n_bar: u32) -> Self {
        Self {
            family: ZipfFamily::M1,
            a,
            b: 0.0,
            alpha: 0.0,
            k_c: 0,
            n_bar,
        }
    }

    pub fn m2(a: f64, b: f64, n_bar: u32) -> Self {
        Self {
            family: ZipfFamily::M2,
            b,
            ..Self::m1(a, n_bar)
        }
    }

    pub fn m3(a: f64, alpha: f64, n_bar: u32) -> Self {
        Self {
            family: ZipfFamily::M3,
            alpha,
            ..Self::m1(a, n_bar)
        }
    }

    pub fn m4(a: f64, b: f64, alpha: f64, n_bar: u32) -> Self {
        Self {
            family: ZipfFamily::M4,
            b,
            alpha,
            ..Self::m1(a, n_bar)
        }
    }

    pub fn m5(a: f64, k_c: u32, n_bar: u32) -> Self {
        Self {
            family: ZipfFamily::M5,
            k_c,
            ..Self::m1(a, n_bar)
        }
    }

    /// The parameters this family uses, by name.
    pub fn params(&self) -> BTreeMap<&'static str, f64> {
        let mut p = BTreeMap::from([("a", self.a)]);
        match self.family {
            ZipfFamily::M1 => {}
            ZipfFamily::M2 => {
                p.insert("b", self.b);
            }
            ZipfFamily::M3 => {
                p.insert("alpha", self.alpha);
            }
            ZipfFamily::M4 => {
                p.insert("b", self.b);
                p.insert("alpha", self.alpha);
            }
            ZipfFamily::M5 => {
                p.insert("k_c", self.k_c as f64);
            }
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::domain(format!(
                "invalid {} parameters: {what} ({self:?})",
                self.family
            )))
        };
        if self.n_bar == 0 {
            return bad("N̄ must be at least 1");
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad("a must be positive");
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return bad("b must be non-negative");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be non-negative");
        }
        if self.family == ZipfFamily::M5 && !(1..=self.n_bar).contains(&self.k_c) {
            return bad("k_c must lie in 1..=N̄");
        }
        Ok(())
    }

    /// Natural log of the unnormalized model at rank `k`.
    fn ln_unnormalized(&self, k: u32) -> f64 {
        let ln_k = (k as f64).ln();
        let finite_size = || self.alpha * ((self.n_bar + 1 - k) as f64).ln();
        let decay = || self.b * (k - 1) as f64;
        match self.family {
            ZipfFamily::M1 => -self.a * ln_k,
            ZipfFamily::M2 => -self.a * ln_k - decay(),
            ZipfFamily::M3 => -self.a * ln_k + finite_size(),
            ZipfFamily::M4 => -self.a * ln_k + finite_size() - decay(),
            ZipfFamily::M5 => {
                if k <= self.k_c {
                    -ln_k
                } else {
                    (self.a - 1.0) * (self.k_c as f64).ln() - self.a * ln_k
                }
            }
        }
    }
}

/// Compensated (Neumaier) summation.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// A model together with its normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfModel {
    pub spec: ZipfModelSpec,
    ln_norm: f64,
}

impl ZipfModel {
    /// Computes `𝒩 = 1 / Σ_{k=1..N̄} unnormalized(k)` by direct summation,
    /// scaled by the value at `k = 1` (the maximum, since every factor is
    /// non-increasing in `k`) so that no term overflows.
    pub fn new(spec: ZipfModelSpec) -> Result<Self> {
        spec.validate()?;
        let top = spec.ln_unnormalized(1);
        let sum = neumaier_sum((1..=spec.n_bar).map(|k| (spec.ln_unnormalized(k) - top).exp()));
        let ln_norm = -(top + sum.ln());
        if !(sum >= 1.0 && ln_norm.is_finite()) {
            return Err(Error::domain(format!(
                "normalization diverges for {spec:?}"
            )));
        }
        Ok(Self { spec, ln_norm })
    }

    /// The factor `𝒩`; may underflow for extreme parameters, see [`Self::ln_normalization`].
    pub fn normalization(&self) -> f64 {
        self.ln_norm.exp()
    }

    pub fn ln_normalization(&self) -> f64 {
        self.ln_norm
    }

    /// Probability of rank `k`.
    pub fn evaluate(&self, k: u32) -> Result<f64> {
        if !(1..=self.spec.n_bar).contains(&k) {
            return Err(Error::domain(format!(
                "rank {k} outside 1..={}",
                self.spec.n_bar
            )));
        }
        Ok(self.p(k))
    }

    fn p(&self, k: u32) -> f64 {
        self.ln_p(k).exp()
    }

    fn ln_p(&self, k: u32) -> f64 {
        self.ln_norm + self.spec.ln_unnormalized(k)
    }

    /// Probabilities of ranks `1..=N̄`.
    pub fn pmf(&self) -> Vec<f64> {
        (1..=self.spec.n_bar).map(|k| self.p(k)).collect()
    }
}

pub fn normalize(spec: &ZipfModelSpec) -> Result<f64> {
    Ok(ZipfModel::new(*spec)?.normalization())
}

/// Whether χ² was computed from counts (Pearson) or from relative frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Chi2Kind {
    /// `Σ (O - E)² / E` with `E = total · model(k)`; requires integral counts.
    Counts,
    /// `Σ (f_obs - f_model)² / f_model` on relative frequencies.
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub value: f64,
    pub kind: Chi2Kind,
}

/// Observed relative frequencies over a rank range plus the scale that turns
/// the frequency χ² into the Pearson statistic.
struct Observed {
    lo: u32,
    freq: Vec<f64>,
    kind: Chi2Kind,
    scale: f64,
}

impl Observed {
    fn new(table: &RankTable, k_range: &RangeInclusive<usize>) -> Result<Self> {
        let (lo, hi) = (*k_range.start(), *k_range.end());
        if lo == 0 || lo > hi || hi > table.len() {
            return Err(Error::domain(format!(
                "rank range {lo}..={hi} not within the table's 1..={}",
                table.len()
            )));
        }
        let total = table.total();
        let counts: Vec<f64> = (lo..=hi).map(|k| table.count(k)).collect();
        let integral =
            table.has_observed_counts() && table.iter().all(|(_, _, c)| c.fract() == 0.0);
        let (kind, scale) = if integral {
            (Chi2Kind::Counts, total)
        } else {
            (Chi2Kind::Frequency, 1.0)
        };
        Ok(Self {
            lo: lo as u32,
            freq: counts.iter().map(|c| c / total).collect(),
            kind,
            scale,
        })
    }

    fn ranks(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.freq
            .iter()
            .enumerate()
            .map(|(i, &f)| (self.lo + i as u32, f))
    }

    fn chi2(&self, model: &ZipfModel) -> f64 {
        self.scale * self.frequency_chi2(model)
    }

    fn frequency_chi2(&self, model: &ZipfModel) -> f64 {
        neumaier_sum(self.ranks().map(|(k, fo)| {
            let fm = model.p(k);
            (fo - fm) * (fo - fm) / fm
        }))
    }

    /// The fitting objective: `ln(1 + χ²)` on relative frequencies, which has
    /// the minimizer of the Pearson statistic. Terms whose model probability
    /// underflows are kept in log space so the objective stays finite and
    /// sloped far from the optimum.
    fn objective(&self, spec: ZipfModelSpec) -> f64 {
        let Ok(model) = ZipfModel::new(spec) else {
            return f64::INFINITY;
        };
        let mut plain = Vec::with_capacity(self.freq.len());
        let mut ln_terms = Vec::new();
        for (k, fo) in self.ranks() {
            let ln_fm = model.ln_p(k);
            let fm = ln_fm.exp();
            if fm > 1e-250 {
                plain.push((fo - fm) * (fo - fm) / fm);
            } else {
                ln_terms.push(2.0 * fo.ln() - ln_fm);
            }
        }
        let plain = neumaier_sum(plain.into_iter());
        if ln_terms.is_empty() {
            return plain.ln_1p();
        }
        if plain > 0.0 {
            ln_terms.push(plain.ln());
        }
        let top = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ln_chi2 = top + neumaier_sum(ln_terms.iter().map(|t| (t - top).exp())).ln();
        if ln_chi2 > 40.0 {
            ln_chi2
        } else {
            ln_chi2.exp().ln_1p()
        }
    }
}

/// χ² of a given model against the observed table over `k_range`.
pub fn chi_square(
    model: &ZipfModel,
    observed: &RankTable,
    k_range: RangeInclusive<usize>,
) -> Result<ChiSquare> {
    if *k_range.end() > model.spec.n_bar as usize {
        return Err(Error::domain(format!(
            "rank range ends at {} beyond the model's N̄ = {}",
            k_range.end(),
            model.spec.n_bar
        )));
    }
    let obs = Observed::new(observed, &k_range)?;
    Ok(ChiSquare {
        value: obs.chi2(model),
        kind: obs.kind,
    })
}

/// Upper tail probability of the χ² distribution, or an underflow marker when
/// it is below the smallest normal double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValue {
    Value(f64),
    Underflow,
}

impl PValue {
    pub const UNDERFLOW_TEXT: &'static str = "< 2.3e-308";

    /// The value, with underflow reported as zero.
    pub fn as_f64(self) -> f64 {
        match self {
            Self::Value(p) => p,
            Self::Underflow => 0.0,
        }
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value(p) => write!(f, "{p}"),
            Self::Underflow => f.write_str(Self::UNDERFLOW_TEXT),
        }
    }
}

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Value(p) => s.serialize_f64(*p),
            Self::Underflow => s.serialize_str(Self::UNDERFLOW_TEXT),
        }
    }
}

/// `1 - P(dof/2, chi2/2)`, evaluated in log space.
///
/// # Panics
/// If `chi2` is negative or NaN, or `dof` is zero.
pub fn chi2_pvalue(chi2: f64, dof: usize) -> PValue {
    assert!(chi2 >= 0.0, "chi2 must be non-negative, got {chi2}");
    assert!(dof >= 1, "dof must be at least 1");
    if chi2.is_infinite() {
        return PValue::Underflow;
    }
    let ln_p = ln_gamma_q(dof as f64 / 2.0, chi2 / 2.0);
    if ln_p < f64::MIN_POSITIVE.ln() {
        PValue::Underflow
    } else {
        PValue::Value(ln_p.exp().min(1.0))
    }
}

/// `log10(f_obs / f_model)` per rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub points: Vec<(u32, f64)>,
    /// Ranks skipped because the model or the observation is zero there.
    pub excluded: usize,
}

impl RatioCurve {
    /// Writes `k,log10_ratio`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,log10_ratio")?;
        for (k, r) in &self.points {
            writeln!(w, "{k},{r}")?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZipfModelFit {
    pub model: ZipfModel,
    pub chi2: ChiSquare,
    pub dof: usize,
    pub p_value: PValue,
    pub k_range: RangeInclusive<usize>,
    pub log_ratio_curve: RatioCurve,
}

impl ZipfModelFit {
    pub fn spec(&self) -> &ZipfModelSpec {
        &self.model.spec
    }

    pub fn report(&self) -> FitReport {
        let spec = self.spec();
        FitReport {
            family: spec.family,
            params: spec.params(),
            n_bar: spec.n_bar,
            normalization: self.model.normalization(),
            chi2: self.chi2.value,
            chi2_kind: self.chi2.kind,
            dof: self.dof,
            p_value: self.p_value,
            k_range: (*self.k_range.start(), *self.k_range.end()),
        }
    }
}

/// Serializable summary of one fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub family: ZipfFamily,
    pub params: BTreeMap<&'static str, f64>,
    pub n_bar: u32,
    pub normalization: f64,
    pub chi2: f64,
    pub chi2_kind: Chi2Kind,
    pub dof: usize,
    pub p_value: PValue,
    pub k_range: (usize, usize),
}

pub fn model_ratio_curve(fit: &ZipfModelFit, observed: &RankTable) -> Result<RatioCurve> {
    let obs = Observed::new(observed, &fit.k_range)?;
    let mut points = Vec::with_capacity(obs.freq.len());
    let mut excluded = 0;
    for (k, fo) in obs.ranks() {
        let fm = fit.model.p(k);
        if fm > 0.0 && fo > 0.0 {
            points.push((k, (fo / fm).log10()));
        } else {
            excluded += 1;
        }
    }
    if excluded > 0 {
        warn!("{excluded} ranks with zero model or observed frequency left out of the ratio curve");
    }
    Ok(RatioCurve { points, excluded })
}

/// `j`-th point (1-based) of the Halton sequence in bases 2, 3, 5.
fn halton(j: usize, dim: usize) -> f64 {
    let base = [2usize, 3, 5][dim];
    let (mut f, mut r, mut i) = (1.0, 0.0, j);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn nm_options() -> NelderMeadOptions {
    NelderMeadOptions {
        max_iterations: 20_000,
        f_tolerance: 1e-13,
        x_tolerance: 1e-8,
    }
}

/// Runs Nelder–Mead from every start in parallel and keeps the best
/// converged result; fails with the best iterate if none converged.
fn multi_start<F>(starts: &[Vec<f64>], objective: F) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let runs: Vec<Result<Minimum>> = starts
        .par_iter()
        .map(|x0| {
            nelder_mead(
                "zipf model fit",
                &objective,
                x0,
                &vec![0.5; x0.len()],
                nm_options(),
            )
        })
        .collect();
    let mut best: Option<Minimum> = None;
    let mut failure: Option<Error> = None;
    for run in runs {
        match run {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.value < b.value) {
                    best = Some(m);
                }
            }
            Err(e @ Error::NotConverged { .. }) => {
                let better = match (&failure, &e) {
                    (
                        Some(Error::NotConverged { value: old, .. }),
                        Error::NotConverged { value, .. },
                    ) => value < old,
                    _ => true,
                };
                if better {
                    failure = Some(e);
                }
            }
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| failure.expect("at least one start"))
}

/// Parameter boxes of the continuous parameters of a family, in the order
/// they appear in the optimization vector.
fn boxes(family: ZipfFamily) -> &'static [BoxMap] {
    match family {
        ZipfFamily::M1 | ZipfFamily::M5 => &[A_BOX],
        ZipfFamily::M2 => &[A_BOX, B_BOX],
        ZipfFamily::M3 => &[A_BOX, ALPHA_BOX],
        ZipfFamily::M4 => &[A_BOX, B_BOX, ALPHA_BOX],
    }
}

fn spec_from(family: ZipfFamily, v: &[f64], k_c: u32, n_bar: u32) -> ZipfModelSpec {
    match family {
        ZipfFamily::M1 => ZipfModelSpec::m1(v[0], n_bar),
        ZipfFamily::M2 => ZipfModelSpec::m2(v[0], v[1], n_bar),
        ZipfFamily::M3 => ZipfModelSpec::m3(v[0], v[1], n_bar),
        ZipfFamily::M4 => ZipfModelSpec::m4(v[0], v[1], v[2], n_bar),
        ZipfFamily::M5 => ZipfModelSpec::m5(v[0], k_c, n_bar),
    }
}

/// The deterministic starts: Halton points spread over the parameter box,
/// in the unconstrained coordinates.
fn box_starts(family: ZipfFamily) -> Vec<Vec<f64>> {
    let bx = boxes(family);
    (1..=MULTI_STARTS)
        .map(|j| {
            bx.iter()
                .enumerate()
                .map(|(d, m)| m.to_unbounded(m.lo + halton(j, d) * (m.hi - m.lo)))
                .collect()
        })
        .collect()
}

/// Fits the continuous parameters for a fixed `k_c` (ignored except for m5).
fn fit_continuous(
    family: ZipfFamily,
    obs: &Observed,
    n_bar: u32,
    k_c: u32,
    extra_starts: &[ZipfModelSpec],
) -> Result<ZipfModelSpec> {
    let bx = boxes(family);
    let mut starts = box_starts(family);
    for s in extra_starts {
        let v: Vec<f64> = match family {
            ZipfFamily::M4 => vec![s.a, s.b, s.alpha],
            _ => vec![s.a],
        };
        starts.push(bx.iter().zip(&v).map(|(m, x)| m.to_unbounded(*x)).collect());
    }
    let to_spec = |u: &[f64]| {
        let v: Vec<f64> = bx.iter().zip(u).map(|(m, x)| m.to_bounded(*x)).collect();
        spec_from(family, &v, k_c, n_bar)
    };
    let best = multi_start(&starts, |u| obs.objective(to_spec(u)))?;
    Ok(to_spec(&best.x))
}

/// Best `(spec, chi2)` of m5 over integer crossover ranks.
fn fit_m5(obs: &Observed, n_bar: u32) -> Result<ZipfModelSpec> {
    let eval = |k_c: u32| -> Result<(ZipfModelSpec, f64)> {
        let spec = fit_continuous(ZipfFamily::M5, obs, n_bar, k_c, &[])?;
        Ok((spec, obs.objective(spec)))
    };
    let top = (n_bar as f64).ln();
    let mut grid: Vec<u32> = (0..KC_GRID)
        .map(|i| ((top * i as f64 / (KC_GRID - 1) as f64).exp().round() as u32).clamp(1, n_bar))
        .collect();
    grid.dedup();
    let scanned: Vec<(ZipfModelSpec, f64)> =
        grid.par_iter().map(|&k| eval(k)).collect::<Result<_>>()?;
    let best_i = (0..scanned.len())
        .min_by(|&i, &j| scanned[i].1.total_cmp(&scanned[j].1))
        .expect("non-empty grid");
    let (mut best, mut best_chi2) = scanned[best_i];
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];

    // integer hill climb between the neighbouring grid points with halving steps
    let mut step = ((hi - lo) / 2).max(1);
    loop {
        let mut moved = false;
        for cand in [best.k_c.saturating_sub(step), best.k_c + step] {
            if cand < lo.max(1) || cand > hi || cand == best.k_c {
                continue;
            }
            let (spec, chi2) = eval(cand)?;
            if chi2 < best_chi2 {
                best = spec;
                best_chi2 = chi2;
                moved = true;
            }
        }
        if !moved {
            if step == 1 {
                break;
            }
            step /= 2;
        }
    }
    Ok(best)
}

fn finish(
    spec: ZipfModelSpec,
    obs: &Observed,
    observed: &RankTable,
    k_range: RangeInclusive<usize>,
) -> Result<ZipfModelFit> {
    let model = ZipfModel::new(spec)?;
    let ranks = k_range.end() - k_range.start() + 1;
    let dof = ranks - spec.family.free_params() - 1;
    let chi2 = ChiSquare {
        value: obs.chi2(&model),
        kind: obs.kind,
    };
    let mut fit = ZipfModelFit {
        model,
        chi2,
        dof,
        p_value: chi2_pvalue(chi2.value, dof),
        k_range,
        log_ratio_curve: RatioCurve {
            points: Vec::new(),
            excluded: 0,
        },
    };
    fit.log_ratio_curve = model_ratio_curve(&fit, observed)?;
    Ok(fit)
}

fn check_dof(family: ZipfFamily, k_range: &RangeInclusive<usize>) -> Result<()> {
    let ranks = (k_range.end() + 1).saturating_sub(*k_range.start());
    if ranks < family.free_params() + 2 {
        return Err(Error::domain(format!(
            "{ranks} ranks leave no degrees of freedom for {family}"
        )));
    }
    Ok(())
}

fn fit_one(
    family: ZipfFamily,
    observed: &RankTable,
    obs: &Observed,
    k_range: RangeInclusive<usize>,
    warm: &[ZipfModelSpec],
) -> Result<ZipfModelFit> {
    check_dof(family, &k_range)?;
    let n_bar = observed.len() as u32;
    let spec = match family {
        ZipfFamily::M5 => fit_m5(obs, n_bar)?,
        _ => fit_continuous(family, obs, n_bar, 0, warm)?,
    };
    finish(spec, obs, observed, k_range)
}

/// Fits one family to the observed table over `k_range`, with `N̄` the
/// table's vocabulary size.
///
/// m4 is also started from the m2 and m3 optima, so its χ² never exceeds
/// theirs.
pub fn fit(
    family: ZipfFamily,
    observed: &RankTable,
    k_range: RangeInclusive<usize>,
) -> Result<ZipfModelFit> {
    let obs = Observed::new(observed, &k_range)?;
    let warm = if family == ZipfFamily::M4 {
        vec![
            fit_one(ZipfFamily::M2, observed, &obs, k_range.clone(), &[])?
                .model
                .spec,
            fit_one(ZipfFamily::M3, observed, &obs, k_range.clone(), &[])?
                .model
                .spec,
        ]
    } else {
        Vec::new()
    };
    fit_one(family, observed, &obs, k_range, &warm)
}

/// Fits all five families, in order m1..m5.
pub fn fit_all(observed: &RankTable, k_range: RangeInclusive<usize>) -> Result<Vec<ZipfModelFit>> {
    let obs = Observed::new(observed, &k_range)?;
    let [m1, m2, m3, m5] = [
        ZipfFamily::M1,
        ZipfFamily::M2,
        ZipfFamily::M3,
        ZipfFamily::M5,
    ]
    .map(|f| fit_one(f, observed, &obs, k_range.clone(), &[]));
    let (m1, m2, m3, m5) = (m1?, m2?, m3?, m5?);
    let m4 = fit_one(
        ZipfFamily::M4,
        observed,
        &obs,
        k_range,
        &[m2.model.spec, m3.model.spec],
    )?;
    Ok(vec![m1, m2, m3, m4, m5])
}

//! Comparison allocators that estimate each venue's liquidity tail from
//! censored samples and allocate greedily on the estimated tails.
//!
//! `OptKm` uses a product-limit (Kaplan-Meier) estimate whose hazard is
//! zero wherever no sample is at risk, so depths that were never probed
//! keep the survival mass of the last probed depth. `ParMl` fits the
//! zero-bin plus power law model by censored maximum likelihood.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rounding::{sample_subset, MarginalVector};
use crate::types::{IntegralAllocation, RoundOutcome};
use crate::zbpl::ZbplParams;

/// One venue's observation: `consumed < allocated` reveals the liquidity
/// exactly, `consumed == allocated` only says it was at least `allocated`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensoredSample {
    pub allocated: u32,
    pub consumed: u32,
}

impl CensoredSample {
    pub fn new(allocated: u32, consumed: u32) -> Result<Self> {
        if consumed > allocated {
            return Err(Error::OutOfRange { name: "consumed", value: consumed as f64 });
        }
        Ok(Self { allocated, consumed })
    }

    pub fn exact(&self) -> bool {
        self.consumed < self.allocated
    }

    /// Reads venue `i` of an integral outcome.
    pub fn from_outcome(outcome: &RoundOutcome, i: usize) -> Self {
        let allocated = outcome.allocation()[i].round() as u32;
        let consumed = (outcome.consumed()[i].round() as u32).min(allocated);
        Self { allocated, consumed }
    }
}

/// `tail[s] = P(s_i >= s)` for `s = 0..=V`, with `tail[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    tail: Vec<f64>,
}

impl TailEstimate {
    pub fn new(tail: Vec<f64>) -> Result<Self> {
        if tail.is_empty() {
            return Err(Error::InvalidDims("tail needs at least the s = 0 entry".into()));
        }
        if let Some(w) = tail.windows(2).find(|w| w[1] > w[0] + 1e-12) {
            return Err(Error::OutOfRange { name: "tail", value: w[1] });
        }
        if let Some(&t) = tail.iter().find(|t| !(0.0..=1.0 + 1e-12).contains(*t)) {
            return Err(Error::OutOfRange { name: "tail", value: t });
        }
        Ok(Self { tail })
    }

    pub fn ones(max_volume: u32) -> Self {
        Self { tail: vec![1.0; max_volume as usize + 1] }
    }

    pub fn from_params(params: &ZbplParams, max_volume: u32) -> Self {
        Self { tail: params.tail(max_volume) }
    }

    /// `P(s >= s)`; zero beyond the estimated range.
    pub fn at(&self, s: u32) -> f64 {
        self.tail.get(s as usize).copied().unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.tail
    }

    pub fn max_volume(&self) -> u32 {
        (self.tail.len() - 1) as u32
    }
}

/// Sufficient statistics of a venue's censored history for the
/// product-limit estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct KmCounts {
    /// `exact[k]`: samples observed exactly at `k`.
    exact: Vec<u64>,
    /// `censored[a]`: samples known only to be `>= a`.
    censored: Vec<u64>,
}

impl KmCounts {
    pub fn new(max_volume: u32) -> Self {
        let n = max_volume as usize + 1;
        Self { exact: vec![0; n], censored: vec![0; n] }
    }

    pub fn push(&mut self, sample: CensoredSample) {
        if sample.exact() {
            self.exact[sample.consumed as usize] += 1;
        } else if sample.allocated > 0 {
            self.censored[sample.allocated as usize] += 1;
        }
    }

    /// Product-limit tail `T(s) = prod_{j < s} (1 - d_j / n_j)` with hazard
    /// zero where nothing is at risk.
    pub fn tails(&self) -> TailEstimate {
        let n = self.exact.len();
        let mut tail = vec![1.0; n];
        // at_risk(j) = #exact >= j + #censored > j
        let mut exact_ge = vec![0u64; n + 1];
        let mut censored_gt = vec![0u64; n + 1];
        for j in (0..n).rev() {
            exact_ge[j] = exact_ge[j + 1] + self.exact[j];
            censored_gt[j] = censored_gt[j + 1] + if j + 1 < n { self.censored[j + 1] } else { 0 };
        }
        for s in 1..n {
            let j = s - 1;
            let at_risk = exact_ge[j] + censored_gt[j];
            let hazard = if at_risk == 0 { 0.0 } else { self.exact[j] as f64 / at_risk as f64 };
            tail[s] = tail[j] * (1.0 - hazard);
        }
        TailEstimate { tail }
    }
}

/// Product-limit estimate of `P(s >= s)` for `s = 0..=max_volume`.
pub fn km_update(history: &[CensoredSample], max_volume: u32) -> Result<TailEstimate> {
    let mut counts = KmCounts::new(max_volume);
    for &h in history {
        if h.allocated > max_volume {
            return Err(Error::VolumeOutOfRange { volume: h.allocated, max: max_volume });
        }
        counts.push(h);
    }
    Ok(counts.tails())
}

/// Assigns units one at a time to the venue with the largest marginal
/// gain `T_i(u_i + 1)`; ties go to the lowest index.
pub fn greedy_allocate(tails: &[TailEstimate], volume: u32) -> Result<IntegralAllocation> {
    if tails.is_empty() {
        return Err(Error::InvalidDims("no venues".into()));
    }
    let mut alloc = vec![0u32; tails.len()];
    for _ in 0..volume {
        let mut best = 0;
        let mut best_gain = f64::NEG_INFINITY;
        for (i, t) in tails.iter().enumerate() {
            let g = t.at(alloc[i] + 1);
            if g > best_gain {
                best = i;
                best_gain = g;
            }
        }
        alloc[best] += 1;
    }
    IntegralAllocation::new(alloc, volume)
}

/// Bracket and tolerance of the exponent search.
pub const BETA_RANGE: (f64, f64) = (1.01, 5.0);
pub const BETA_TOL: f64 = 1e-4;
/// Exponent used before any positive sample has been seen.
pub const PRIOR_BETA: f64 = 1.5;

/// Sufficient statistics for the censored likelihood of one venue.
#[derive(Debug, Clone, PartialEq)]
pub struct ParmlCounts {
    zeros: u64,
    /// `exact[k]`, `k >= 1`.
    exact: Vec<u64>,
    /// `censored[c]`: samples known to be `>= c`, `c >= 1`.
    censored: Vec<u64>,
}

impl ParmlCounts {
    pub fn new(max_volume: u32) -> Self {
        let n = max_volume as usize + 1;
        Self { zeros: 0, exact: vec![0; n], censored: vec![0; n] }
    }

    pub fn push(&mut self, sample: CensoredSample) {
        if sample.exact() {
            if sample.consumed == 0 {
                self.zeros += 1;
            } else {
                self.exact[sample.consumed as usize] += 1;
            }
        } else if sample.allocated > 0 {
            self.censored[sample.allocated as usize] += 1;
        }
    }

    pub fn zeros(&self) -> u64 {
        self.zeros
    }

    /// `exact()[k]`: samples observed exactly at `k >= 1`.
    pub fn exact(&self) -> &[u64] {
        &self.exact
    }

    /// `censored()[c]`: samples known only to be `>= c`.
    pub fn censored(&self) -> &[u64] {
        &self.censored
    }

    /// Samples known to be positive.
    pub fn positives(&self) -> u64 {
        self.exact.iter().sum::<u64>() + self.censored.iter().sum::<u64>()
    }

    /// Samples that carry information about the exponent: exact positive
    /// values and censoring points above 1.
    pub fn shape_informative(&self) -> u64 {
        self.exact.iter().sum::<u64>() + self.censored.iter().skip(2).sum::<u64>()
    }

    /// Censored log-likelihood of the power-law part at exponent `beta`.
    pub fn log_likelihood(&self, beta: f64, s_max: u32) -> f64 {
        let s_max = s_max as usize;
        let mut suffix = vec![0.0; s_max + 2];
        for k in (1..=s_max).rev() {
            suffix[k] = suffix[k + 1] + (-(beta * (k as f64).ln())).exp();
        }
        let ln_z = suffix[1].ln();
        let mut ll = 0.0;
        let mut n = 0u64;
        for (k, &c) in self.exact.iter().enumerate().skip(1) {
            if c > 0 {
                ll -= c as f64 * beta * (k as f64).ln();
                n += c;
            }
        }
        for (c, &m) in self.censored.iter().enumerate().skip(1) {
            if m > 0 {
                ll += m as f64 * suffix.get(c).copied().unwrap_or(0.0).ln();
                n += m;
            }
        }
        ll - n as f64 * ln_z
    }
}

/// Maximum-likelihood zero-bin plus power law fit: `p0` in closed form
/// from the zero/positive split, `beta` by golden-section search. Without
/// information about the exponent it stays at [`PRIOR_BETA`]; an empty
/// history gives `p0 = 0`.
pub fn parml_fit(counts: &ParmlCounts, s_max: u32) -> Result<ZbplParams> {
    let pos = counts.positives();
    let p0 = if counts.zeros + pos == 0 { 0.0 } else { counts.zeros as f64 / (counts.zeros + pos) as f64 };
    let beta = if counts.shape_informative() == 0 { PRIOR_BETA } else { fit_beta(counts, s_max) };
    ZbplParams::new(p0, beta, s_max)
}

fn fit_beta(counts: &ParmlCounts, s_max: u32) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = BETA_RANGE;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = counts.log_likelihood(c, s_max);
    let mut fd = counts.log_likelihood(d, s_max);
    while b - a > BETA_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = counts.log_likelihood(c, s_max);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = counts.log_likelihood(d, s_max);
        }
    }
    (a + b) / 2.0
}

/// Greedy allocation on the tails implied by fitted parameters.
pub fn parml_allocate(params: &[ZbplParams], volume: u32) -> Result<IntegralAllocation> {
    let tails: Vec<TailEstimate> = params.iter().map(|p| TailEstimate::from_params(p, volume)).collect();
    greedy_allocate(&tails, volume)
}

fn check_outcome(outcome: &RoundOutcome, venues: usize, max_volume: u32) -> Result<()> {
    if outcome.venues() != venues {
        return Err(Error::DimensionMismatch { expected: venues, got: outcome.venues() });
    }
    if outcome.volume() > max_volume {
        return Err(Error::VolumeOutOfRange { volume: outcome.volume(), max: max_volume });
    }
    Ok(())
}

/// Greedy allocation on optimistic product-limit tails.
#[derive(Debug, Clone, PartialEq)]
pub struct OptKm {
    counts: Vec<KmCounts>,
    tails: Vec<TailEstimate>,
    max_volume: u32,
}

impl OptKm {
    pub fn new(venues: usize, max_volume: u32) -> Self {
        Self {
            counts: vec![KmCounts::new(max_volume); venues],
            tails: vec![TailEstimate::ones(max_volume); venues],
            max_volume,
        }
    }

    pub fn tails(&self) -> &[TailEstimate] {
        &self.tails
    }

    pub fn allocate(&self, volume: u32) -> Result<IntegralAllocation> {
        if volume > self.max_volume {
            return Err(Error::VolumeOutOfRange { volume, max: self.max_volume });
        }
        greedy_allocate(&self.tails, volume)
    }

    pub fn observe(&mut self, outcome: &RoundOutcome) -> Result<()> {
        check_outcome(outcome, self.counts.len(), self.max_volume)?;
        for i in 0..self.counts.len() {
            let sample = CensoredSample::from_outcome(outcome, i);
            if sample.allocated > 0 {
                self.counts[i].push(sample);
                self.tails[i] = self.counts[i].tails();
            }
        }
        Ok(())
    }
}

/// When `ParMl` trusts and refreshes its fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParmlSchedule {
    /// Samples (zeros plus positives) before `p0` leaves the prior.
    pub min_samples: u64,
    /// Exponent-informative samples before `beta` leaves the prior.
    pub min_shape_samples: u64,
    /// Relative growth of exponent-informative samples that triggers a refit.
    pub refit_growth: f64,
}

impl Default for ParmlSchedule {
    fn default() -> Self {
        Self { min_samples: 80, min_shape_samples: 30, refit_growth: 0.1 }
    }
}

/// Greedy allocation on censored maximum-likelihood fits.
///
/// `p0` is refit every round. The exponent is refit only when the number
/// of samples informative about it has grown by `refit_growth` since the
/// last fit. Until a venue has enough samples each parameter stays at the
/// prior `p0 = 0`, `beta = PRIOR_BETA`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParMl {
    counts: Vec<ParmlCounts>,
    params: Vec<ZbplParams>,
    /// Power-law tail `P(s >= u | s > 0)` for `u = 0..=V` at the current exponent.
    shape_tails: Vec<Vec<f64>>,
    fitted_at: Vec<u64>,
    s_max: u32,
    max_volume: u32,
    schedule: ParmlSchedule,
}

impl ParMl {
    /// `s_max` is the model's truncation point.
    pub fn new(venues: usize, max_volume: u32, s_max: u32) -> Result<Self> {
        Self::with_schedule(venues, max_volume, s_max, ParmlSchedule::default())
    }

    pub fn with_schedule(venues: usize, max_volume: u32, s_max: u32, schedule: ParmlSchedule) -> Result<Self> {
        if s_max < max_volume {
            return Err(Error::InvalidDims(format!("s_max {s_max} below max volume {max_volume}")));
        }
        if !(schedule.refit_growth >= 0.0) {
            return Err(Error::OutOfRange { name: "refit_growth", value: schedule.refit_growth });
        }
        let prior = ZbplParams::new(0.0, PRIOR_BETA, s_max)?;
        let shape = prior.tail(max_volume);
        Ok(Self {
            counts: vec![ParmlCounts::new(max_volume); venues],
            params: vec![prior; venues],
            shape_tails: vec![shape; venues],
            fitted_at: vec![0; venues],
            s_max,
            max_volume,
            schedule,
        })
    }

    pub fn params(&self) -> &[ZbplParams] {
        &self.params
    }

    pub fn counts(&self) -> &[ParmlCounts] {
        &self.counts
    }

    pub fn allocate(&self, volume: u32) -> Result<IntegralAllocation> {
        if volume > self.max_volume {
            return Err(Error::VolumeOutOfRange { volume, max: self.max_volume });
        }
        let tails: Vec<TailEstimate> = self
            .params
            .iter()
            .zip(&self.shape_tails)
            .map(|(p, shape)| {
                let mut t: Vec<f64> = shape.iter().map(|x| (1.0 - p.p0) * x).collect();
                t[0] = 1.0;
                TailEstimate { tail: t }
            })
            .collect();
        greedy_allocate(&tails, volume)
    }

    pub fn observe(&mut self, outcome: &RoundOutcome) -> Result<()> {
        check_outcome(outcome, self.counts.len(), self.max_volume)?;
        for i in 0..self.counts.len() {
            let sample = CensoredSample::from_outcome(outcome, i);
            if sample.allocated == 0 {
                continue;
            }
            let c = &mut self.counts[i];
            c.push(sample);
            let pos = c.positives();
            let p0 = if c.zeros() + pos < self.schedule.min_samples {
                self.params[i].p0
            } else {
                c.zeros() as f64 / (c.zeros() + pos) as f64
            };
            let informative = c.shape_informative();
            let stale = informative >= self.schedule.min_shape_samples.max(1)
                && (self.fitted_at[i] == 0
                    || informative as f64 >= (1.0 + self.schedule.refit_growth) * self.fitted_at[i] as f64);
            let beta = if stale {
                self.fitted_at[i] = informative;
                let b = fit_beta(c, self.s_max);
                let mut shape = ZbplParams::new(0.0, b, self.s_max)?.tail(self.max_volume);
                shape[0] = 1.0;
                self.shape_tails[i] = shape;
                b
            } else {
                self.params[i].beta
            };
            self.params[i] = ZbplParams::new(p0, beta, self.s_max)?;
        }
        Ok(())
    }
}

/// `floor(V/K)` units everywhere plus the remainder on a uniformly random
/// subset of venues.
pub fn uniform_allocate<R: Rng + ?Sized>(venues: usize, volume: u32, rng: &mut R) -> Result<IntegralAllocation> {
    if venues == 0 {
        return Err(Error::InvalidDims("no venues".into()));
    }
    let base = volume / venues as u32;
    let rem = volume as usize % venues;
    let mut alloc = vec![base; venues];
    if rem > 0 {
        let q = MarginalVector::new(vec![rem as f64 / venues as f64; venues])?;
        for i in sample_subset(&q, rng) {
            alloc[i] += 1;
        }
    }
    IntegralAllocation::new(alloc, volume)
}

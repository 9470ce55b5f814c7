//! Shared domain types: problem dimensions, the per-unit weight matrix,
//! fractional and integral allocations, and censored round outcomes.

use crate::error::{Error, Result};

/// Absolute tolerance used when comparing real allocations with consumed
/// amounts and when checking that allocations sum to the round volume.
pub const ALLOC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemDims {
    /// Number of venues `K`.
    pub venues: usize,
    /// Upper bound `V` on the per-round volume.
    pub max_volume: u32,
    /// Horizon `T`.
    pub horizon: usize,
}

impl ProblemDims {
    pub fn new(venues: usize, max_volume: u32, horizon: usize) -> Result<Self> {
        if venues < 2 {
            return Err(Error::InvalidDims(format!("need at least 2 venues, got {venues}")));
        }
        if max_volume == 0 {
            return Err(Error::InvalidDims("max volume must be positive".into()));
        }
        if horizon == 0 {
            return Err(Error::InvalidDims("horizon must be positive".into()));
        }
        Ok(Self { venues, max_volume, horizon })
    }
}

/// One probability vector over venues per share unit (a point of the
/// product of `V` simplices).
///
/// The log-domain weights are authoritative. A linear copy of each row is
/// cached and kept in sync so that allocation and most updates avoid
/// evaluating `exp` per entry; it is rebuilt from the log weights whenever
/// an entry gets close to underflow and periodically to shed round-off.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    venues: usize,
    rows: usize,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    updates_since_sync: Vec<u32>,
}

const RESYNC_EVERY: u32 = 4096;
const UNDERFLOW_GUARD: f64 = 1e-280;

impl WeightMatrix {
    /// Every row uniform `1/K`.
    pub fn uniform(rows: usize, venues: usize) -> Self {
        let p = 1.0 / venues as f64;
        Self {
            venues,
            rows,
            log_weights: vec![p.ln(); rows * venues],
            probs: vec![p; rows * venues],
            updates_since_sync: vec![0; rows],
        }
    }

    /// Builds a matrix from explicit probability rows; each row is
    /// normalized, and must be strictly positive.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let venues = rows.first().map(|r| r.len()).unwrap_or(0);
        if venues < 2 {
            return Err(Error::InvalidDims("weight rows need at least 2 venues".into()));
        }
        let mut log_weights = Vec::with_capacity(rows.len() * venues);
        for row in rows {
            if row.len() != venues {
                return Err(Error::DimensionMismatch { expected: venues, got: row.len() });
            }
            if let Some(&bad) = row.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
                return Err(Error::OutOfRange { name: "weight", value: bad });
            }
            log_weights.extend(row.iter().map(|w| w.ln()));
        }
        let mut m = Self {
            venues,
            rows: rows.len(),
            probs: vec![0.0; log_weights.len()],
            log_weights,
            updates_since_sync: vec![0; rows.len()],
        };
        for v in 0..m.rows {
            m.resync_row(v);
        }
        Ok(m)
    }

    pub fn venues(&self) -> usize {
        self.venues
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Probability row for unit `v` (0-based).
    pub fn row(&self, v: usize) -> &[f64] {
        &self.probs[v * self.venues..(v + 1) * self.venues]
    }

    pub fn log_row(&self, v: usize) -> &[f64] {
        &self.log_weights[v * self.venues..(v + 1) * self.venues]
    }

    /// `alloc_i = sum_{v < volume} x_i^v`.
    pub fn prefix_allocation(&self, volume: u32) -> Vec<f64> {
        let mut alloc = vec![0.0; self.venues];
        for v in 0..volume as usize {
            for (a, p) in alloc.iter_mut().zip(self.row(v)) {
                *a += p;
            }
        }
        alloc
    }

    /// Multiplies row `v` entrywise by `exp(log_factor[i])` and renormalizes.
    ///
    /// `factor[i]` must equal `exp(log_factor[i])`; callers precompute it
    /// because the same factors are shared across many rows.
    pub fn scale_row(&mut self, v: usize, log_factor: &[f64], factor: &[f64]) {
        debug_assert_eq!(log_factor.len(), self.venues);
        let k = self.venues;
        let range = v * k..(v + 1) * k;
        let z: f64 = self.probs[range.clone()].iter().zip(factor).map(|(p, f)| p * f).sum();
        if !(z.is_finite() && z > 0.0) {
            for (lw, lf) in self.log_weights[range].iter_mut().zip(log_factor) {
                *lw += lf;
            }
            self.resync_row(v);
            return;
        }
        let ln_z = z.ln();
        let mut underflow = false;
        for i in 0..k {
            let idx = v * k + i;
            self.log_weights[idx] += log_factor[i] - ln_z;
            let p = self.probs[idx] * factor[i] / z;
            underflow |= p < UNDERFLOW_GUARD;
            self.probs[idx] = p;
        }
        self.updates_since_sync[v] += 1;
        if underflow || self.updates_since_sync[v] >= RESYNC_EVERY {
            self.resync_row(v);
        }
    }

    /// Exponentiated-gradient step on row `v`: `x_i <- x_i exp(eta g_i) / Z`.
    pub fn exp_update_row(&mut self, v: usize, eta: f64, gradient: &[f64]) {
        let log_factor: Vec<f64> = gradient.iter().map(|g| eta * g).collect();
        let factor: Vec<f64> = log_factor.iter().map(|l| l.exp()).collect();
        self.scale_row(v, &log_factor, &factor);
    }

    /// Recomputes the normalized log weights and the cached linear row with
    /// max-subtraction.
    fn resync_row(&mut self, v: usize) {
        let k = self.venues;
        let lw = &mut self.log_weights[v * k..(v + 1) * k];
        let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = lw.iter().map(|l| (l - max).exp()).sum();
        let shift = max + sum.ln();
        for l in lw.iter_mut() {
            *l -= shift;
        }
        for (p, l) in self.probs[v * k..(v + 1) * k].iter_mut().zip(lw.iter()) {
            *p = l.exp();
        }
        self.updates_since_sync[v] = 0;
    }
}

/// Real-valued allocation `alloc_i = sum_{v <= V^t} x_i^v`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalAllocation {
    alloc: Vec<f64>,
    volume: u32,
}

impl FractionalAllocation {
    pub fn new(alloc: Vec<f64>, volume: u32) -> Result<Self> {
        if let Some(&bad) = alloc.iter().find(|a| !(**a >= -ALLOC_TOL) || !a.is_finite()) {
            return Err(Error::OutOfRange { name: "allocation", value: bad });
        }
        let sum: f64 = alloc.iter().sum();
        if (sum - volume as f64).abs() > ALLOC_TOL * (1.0 + volume as f64) {
            return Err(Error::OutOfRange { name: "allocation sum", value: sum });
        }
        let alloc = alloc.into_iter().map(|a| a.max(0.0)).collect();
        Ok(Self { alloc, volume })
    }

    pub fn amounts(&self) -> &[f64] {
        &self.alloc
    }

    pub fn volume(&self) -> u32 {
        self.volume
    }
}

/// Whole-share allocation that sums exactly to the round volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralAllocation {
    alloc: Vec<u32>,
    volume: u32,
}

impl IntegralAllocation {
    pub fn new(alloc: Vec<u32>, volume: u32) -> Result<Self> {
        let sum: u64 = alloc.iter().map(|&a| a as u64).sum();
        if sum != volume as u64 {
            return Err(Error::OutOfRange { name: "integral allocation sum", value: sum as f64 });
        }
        Ok(Self { alloc, volume })
    }

    pub fn amounts(&self) -> &[u32] {
        &self.alloc
    }

    pub fn volume(&self) -> u32 {
        self.volume
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.alloc.iter().map(|&a| a as f64).collect()
    }
}

/// Anything that can be played against the venues.
pub trait Allocation {
    fn venue_amounts(&self) -> Vec<f64>;
    fn round_volume(&self) -> u32;
}

impl Allocation for FractionalAllocation {
    fn venue_amounts(&self) -> Vec<f64> {
        self.alloc.clone()
    }
    fn round_volume(&self) -> u32 {
        self.volume
    }
}

impl Allocation for IntegralAllocation {
    fn venue_amounts(&self) -> Vec<f64> {
        self.to_real()
    }
    fn round_volume(&self) -> u32 {
        self.volume
    }
}

/// What an allocator observes after playing: the allocation and the
/// consumed amounts `r_i = min(alloc_i, s_i)`. The liquidities themselves
/// never appear here.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    volume: u32,
    allocation: Vec<f64>,
    consumed: Vec<f64>,
}

impl RoundOutcome {
    /// Builds an outcome from observed fills; requires `0 <= r_i <= alloc_i`.
    pub fn from_fills(volume: u32, allocation: Vec<f64>, consumed: Vec<f64>) -> Result<Self> {
        if allocation.len() != consumed.len() {
            return Err(Error::DimensionMismatch { expected: allocation.len(), got: consumed.len() });
        }
        for (&a, &r) in allocation.iter().zip(&consumed) {
            if !(r >= 0.0) || r > a + ALLOC_TOL {
                return Err(Error::OutOfRange { name: "consumed", value: r });
            }
        }
        Ok(Self { volume, allocation, consumed })
    }

    pub fn volume(&self) -> u32 {
        self.volume
    }

    pub fn allocation(&self) -> &[f64] {
        &self.allocation
    }

    pub fn consumed(&self) -> &[f64] {
        &self.consumed
    }

    pub fn venues(&self) -> usize {
        self.allocation.len()
    }

    /// Shares traded this round.
    pub fn reward(&self) -> f64 {
        self.consumed.iter().sum()
    }

    /// `true` at venue `i` iff the whole allocation was consumed.
    pub fn filled(&self, i: usize) -> bool {
        (self.consumed[i] - self.allocation[i]).abs() <= ALLOC_TOL
    }
}

/// Plays `alloc` against hidden liquidities and returns the censored
/// observation.
pub fn censor_feedback<A: Allocation + ?Sized>(alloc: &A, liquidities: &[f64]) -> Result<RoundOutcome> {
    let amounts = alloc.venue_amounts();
    if amounts.len() != liquidities.len() {
        return Err(Error::DimensionMismatch { expected: amounts.len(), got: liquidities.len() });
    }
    if let Some(&bad) = liquidities.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::OutOfRange { name: "liquidity", value: bad });
    }
    let consumed = amounts.iter().zip(liquidities).map(|(a, s)| a.min(*s)).collect();
    Ok(RoundOutcome { volume: alloc.round_volume(), allocation: amounts, consumed })
}

/// The subgradient of `sum_i min(alloc_i, s_i)`: 1 where the allocation was
/// fully consumed, 0 where it was cut short.
pub fn subgradient_bits(outcome: &RoundOutcome) -> Vec<bool> {
    (0..outcome.venues()).map(|i| outcome.filled(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(a: &[f64]) -> FractionalAllocation {
        let sum: f64 = a.iter().sum();
        FractionalAllocation::new(a.to_vec(), sum.round() as u32).unwrap()
    }

    #[test]
    fn censor_partial_fill() {
        let o = censor_feedback(&frac(&[2.5, 0.5]), &[5.0, 0.0]).unwrap();
        assert_eq!(o.consumed(), &[2.5, 0.0]);
        assert_eq!(subgradient_bits(&o), vec![true, false]);
    }

    #[test]
    fn zero_allocation_is_fully_consumed() {
        let a = IntegralAllocation::new(vec![0, 0], 0).unwrap();
        let o = censor_feedback(&a, &[3.0, 3.0]).unwrap();
        assert_eq!(o.consumed(), &[0.0, 0.0]);
        assert_eq!(subgradient_bits(&o), vec![true, true]);
    }

    #[test]
    fn censor_min_and_equality() {
        let a = IntegralAllocation::new(vec![2, 2], 4).unwrap();
        let o = censor_feedback(&a, &[1.0, 2.0]).unwrap();
        assert_eq!(o.consumed(), &[1.0, 2.0]);
        assert_eq!(subgradient_bits(&o), vec![false, true]);
        assert_eq!(o.reward(), 3.0);
    }

    #[test]
    fn bits_from_observation() {
        let o = RoundOutcome::from_fills(3, vec![2.5, 0.5], vec![2.5, 0.3]).unwrap();
        assert_eq!(subgradient_bits(&o), vec![true, false]);
        let o = RoundOutcome::from_fills(3, vec![2.5, 0.5], vec![2.5, 0.5]).unwrap();
        assert_eq!(subgradient_bits(&o), vec![true, true]);
        let o = RoundOutcome::from_fills(3, vec![2.5, 0.5], vec![1.0, 0.1]).unwrap();
        assert_eq!(subgradient_bits(&o), vec![false, false]);
    }

    #[test]
    fn bits_tolerate_roundoff() {
        let o = RoundOutcome::from_fills(1, vec![0.1 + 0.2, 0.7], vec![0.3, 0.7]).unwrap();
        assert_eq!(subgradient_bits(&o), vec![true, true]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = IntegralAllocation::new(vec![1, 1], 2).unwrap();
        assert!(matches!(censor_feedback(&a, &[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(censor_feedback(&a, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn dims_validation() {
        assert!(ProblemDims::new(1, 5, 10).is_err());
        assert!(ProblemDims::new(2, 0, 10).is_err());
        assert!(ProblemDims::new(2, 1, 0).is_err());
        assert!(ProblemDims::new(2, 1, 1).is_ok());
    }

    #[test]
    fn weight_rows_stay_normalized_under_long_updates() {
        let mut w = WeightMatrix::uniform(2, 3);
        let g = [1.0, 0.0, 0.0];
        for _ in 0..100_000 {
            w.exp_update_row(0, 0.5, &g);
        }
        let row = w.row(0);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(w.log_row(0).iter().all(|l| l.is_finite()));
        // second row untouched
        assert_eq!(w.row(1), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn weight_rows_recover_after_underflow() {
        let mut w = WeightMatrix::uniform(1, 2);
        for _ in 0..2000 {
            w.exp_update_row(0, 1.0, &[1.0, 0.0]);
        }
        assert!(w.log_row(0)[1] < -1500.0);
        for _ in 0..4000 {
            w.exp_update_row(0, 1.0, &[0.0, 1.0]);
        }
        assert!(w.row(0)[1] > 0.99);
    }

    #[test]
    fn fractional_allocation_sum_checked() {
        assert!(FractionalAllocation::new(vec![1.0, 1.0], 3).is_err());
        assert!(FractionalAllocation::new(vec![1.5, 1.5], 3).is_ok());
        assert!(IntegralAllocation::new(vec![1, 1], 3).is_err());
    }
}

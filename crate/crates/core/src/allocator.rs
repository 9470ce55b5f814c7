//! A common interface over every allocator the harness can run.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{uniform_allocate, OptKm, ParMl};
use crate::error::{Error, Result};
use crate::exp3int::{Exp3Int, RoundingPlan};
use crate::expgrad::ExpGrad;
use crate::rng::SimRng;
use crate::types::{Allocation, FractionalAllocation, IntegralAllocation, ProblemDims, RoundOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    ExpGrad,
    Exp3Int,
    Exp3IntHp,
    OptKm,
    ParMl,
    Uniform,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 6] = [
        AlgorithmId::ExpGrad,
        AlgorithmId::Exp3Int,
        AlgorithmId::Exp3IntHp,
        AlgorithmId::OptKm,
        AlgorithmId::ParMl,
        AlgorithmId::Uniform,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmId::ExpGrad => "expgrad",
            AlgorithmId::Exp3Int => "exp3int",
            AlgorithmId::Exp3IntHp => "exp3int_hp",
            AlgorithmId::OptKm => "optkm",
            AlgorithmId::ParMl => "parml",
            AlgorithmId::Uniform => "uniform",
        }
    }

    /// Whether the algorithm plays whole shares.
    pub fn integral(&self) -> bool {
        !matches!(self, AlgorithmId::ExpGrad)
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// An allocation of either flavor.
#[derive(Debug, Clone, PartialEq)]
pub enum Played {
    Fractional(FractionalAllocation),
    Integral(IntegralAllocation),
}

impl Allocation for Played {
    fn venue_amounts(&self) -> Vec<f64> {
        match self {
            Played::Fractional(a) => a.venue_amounts(),
            Played::Integral(a) => a.venue_amounts(),
        }
    }

    fn round_volume(&self) -> u32 {
        match self {
            Played::Fractional(a) => a.round_volume(),
            Played::Integral(a) => a.round_volume(),
        }
    }
}

/// One allocate/observe cycle per round. Only the censored outcome of the
/// round just played is ever passed back.
pub trait Allocator: Send {
    fn allocate(&mut self, volume: u32, rng: &mut SimRng) -> Result<Played>;
    fn observe(&mut self, outcome: &RoundOutcome) -> Result<()>;
}

impl Allocator for ExpGrad {
    fn allocate(&mut self, volume: u32, _rng: &mut SimRng) -> Result<Played> {
        ExpGrad::allocate(self, volume).map(Played::Fractional)
    }

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<()> {
        ExpGrad::observe(self, outcome)
    }
}

/// Keeps the rounding plan of the pending round for the update.
#[derive(Debug, Clone)]
pub struct Exp3IntAllocator {
    inner: Exp3Int,
    pending: Option<RoundingPlan>,
}

impl Exp3IntAllocator {
    pub fn new(inner: Exp3Int) -> Self {
        Self { inner, pending: None }
    }

    pub fn inner(&self) -> &Exp3Int {
        &self.inner
    }
}

impl Allocator for Exp3IntAllocator {
    fn allocate(&mut self, volume: u32, rng: &mut SimRng) -> Result<Played> {
        let (played, plan) = self.inner.plan(volume, rng)?;
        self.pending = Some(plan);
        Ok(Played::Integral(played))
    }

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<()> {
        let plan = self
            .pending
            .take()
            .ok_or_else(|| Error::InvalidScenario("observe called without a pending allocation".into()))?;
        self.inner.update(outcome, &plan)
    }
}

impl Allocator for OptKm {
    fn allocate(&mut self, volume: u32, _rng: &mut SimRng) -> Result<Played> {
        OptKm::allocate(self, volume).map(Played::Integral)
    }

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<()> {
        OptKm::observe(self, outcome)
    }
}

impl Allocator for ParMl {
    fn allocate(&mut self, volume: u32, _rng: &mut SimRng) -> Result<Played> {
        ParMl::allocate(self, volume).map(Played::Integral)
    }

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<()> {
        ParMl::observe(self, outcome)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformAllocator {
    venues: usize,
}

impl Allocator for UniformAllocator {
    fn allocate(&mut self, volume: u32, rng: &mut SimRng) -> Result<Played> {
        uniform_allocate(self.venues, volume, rng).map(Played::Integral)
    }

    fn observe(&mut self, _outcome: &RoundOutcome) -> Result<()> {
        Ok(())
    }
}

/// Truncation point ParML assumes: twice the largest volume.
pub fn parml_s_max(dims: &ProblemDims) -> u32 {
    2 * dims.max_volume
}

/// Fresh allocator with default parameters for the given dimensions.
pub fn build_allocator(id: AlgorithmId, dims: &ProblemDims) -> Result<Box<dyn Allocator>> {
    Ok(match id {
        AlgorithmId::ExpGrad => Box::new(ExpGrad::with_default_eta(dims)),
        AlgorithmId::Exp3Int => Box::new(Exp3IntAllocator::new(Exp3Int::with_defaults(dims, false))),
        AlgorithmId::Exp3IntHp => Box::new(Exp3IntAllocator::new(Exp3Int::with_defaults(dims, true))),
        AlgorithmId::OptKm => Box::new(OptKm::new(dims.venues, dims.max_volume)),
        AlgorithmId::ParMl => Box::new(ParMl::new(dims.venues, dims.max_volume, parml_s_max(dims))?),
        AlgorithmId::Uniform => Box::new(UniformAllocator { venues: dims.venues }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::types::censor_feedback;

    #[test]
    fn ids_round_trip() {
        for id in AlgorithmId::ALL {
            assert_eq!(id.name().parse::<AlgorithmId>().unwrap(), id);
        }
        assert_eq!("exp4".parse::<AlgorithmId>().unwrap_err(), Error::UnknownAlgorithm("exp4".into()));
    }

    #[test]
    fn every_allocator_plays_the_volume() {
        let dims = ProblemDims::new(3, 6, 50).unwrap();
        for id in AlgorithmId::ALL {
            let mut a = build_allocator(id, &dims).unwrap();
            let mut rng = seeded(1);
            for t in 0..50u32 {
                let vol = t % 7;
                let played = a.allocate(vol, &mut rng).unwrap();
                let amounts = played.venue_amounts();
                assert!((amounts.iter().sum::<f64>() - vol as f64).abs() < 1e-9, "{id}");
                if id.integral() {
                    assert!(amounts.iter().all(|x| x.fract() == 0.0), "{id}");
                }
                a.observe(&censor_feedback(&played, &[2.0, 0.0, 5.0]).unwrap()).unwrap();
            }
        }
    }

    #[test]
    fn exp3int_needs_a_pending_round() {
        let dims = ProblemDims::new(2, 2, 5).unwrap();
        let mut a = build_allocator(AlgorithmId::Exp3Int, &dims).unwrap();
        let o = RoundOutcome::from_fills(1, vec![1.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert!(a.observe(&o).is_err());
    }
}

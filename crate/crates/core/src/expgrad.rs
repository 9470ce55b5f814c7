//! Exponentiated gradient over the product of `V` simplices, playing
//! continuous-valued allocations.
//!
//! Unit `v` keeps a distribution `x^v` over venues. A round with volume
//! `V^t` plays `alloc_i = sum_{v <= V^t} x_i^v`, observes which venues were
//! fully consumed, and multiplies every active row by `exp(eta * g_i)`.

use crate::error::{Error, Result};
use crate::types::{subgradient_bits, FractionalAllocation, ProblemDims, RoundOutcome, WeightMatrix};

/// `min(1, sqrt(ln K / ((e - 2) T)))`.
pub fn default_eta(dims: &ProblemDims) -> f64 {
    let k = dims.venues as f64;
    let t = dims.horizon as f64;
    (k.ln() / ((std::f64::consts::E - 2.0) * t)).sqrt().min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpGrad {
    weights: WeightMatrix,
    eta: f64,
    max_volume: u32,
}

impl ExpGrad {
    pub fn new(dims: &ProblemDims, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::OutOfRange { name: "eta", value: eta });
        }
        Ok(Self {
            weights: WeightMatrix::uniform(dims.max_volume as usize, dims.venues),
            eta,
            max_volume: dims.max_volume,
        })
    }

    pub fn with_default_eta(dims: &ProblemDims) -> Self {
        Self::new(dims, default_eta(dims)).expect("default eta lies in (0, 1]")
    }

    /// Starts from explicit weights instead of the uniform initialization.
    pub fn from_weights(weights: WeightMatrix, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::OutOfRange { name: "eta", value: eta });
        }
        let max_volume = weights.rows() as u32;
        Ok(Self { weights, eta, max_volume })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn allocate(&self, volume: u32) -> Result<FractionalAllocation> {
        if volume > self.max_volume {
            return Err(Error::VolumeOutOfRange { volume, max: self.max_volume });
        }
        FractionalAllocation::new(self.weights.prefix_allocation(volume), volume)
    }

    /// Reweights rows `v <= volume` by `exp(eta * g_i)`; rows above the
    /// round volume see a zero gradient and are left as they are.
    pub fn update(&mut self, bits: &[bool], volume: u32) -> Result<()> {
        if bits.len() != self.weights.venues() {
            return Err(Error::DimensionMismatch { expected: self.weights.venues(), got: bits.len() });
        }
        if volume > self.max_volume {
            return Err(Error::VolumeOutOfRange { volume, max: self.max_volume });
        }
        let log_factor: Vec<f64> = bits.iter().map(|&b| if b { self.eta } else { 0.0 }).collect();
        let factor: Vec<f64> = log_factor.iter().map(|l| l.exp()).collect();
        for v in 0..volume as usize {
            self.weights.scale_row(v, &log_factor, &factor);
        }
        Ok(())
    }

    /// Update from a censored observation of this round.
    pub fn observe(&mut self, outcome: &RoundOutcome) -> Result<()> {
        self.update(&subgradient_bits(outcome), outcome.volume())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::censor_feedback;
    use proptest::prelude::*;

    fn dims(k: usize, v: u32, t: usize) -> ProblemDims {
        ProblemDims::new(k, v, t).unwrap()
    }

    #[test]
    fn init_is_uniform() {
        let eg = ExpGrad::new(&dims(4, 2, 10), 0.5).unwrap();
        assert!(eg.weights().row(0).iter().all(|&w| (w - 0.25).abs() < 1e-15));
        let eg = ExpGrad::new(&dims(2, 3, 10), 0.5).unwrap();
        assert_eq!(eg.weights().rows(), 3);
        for v in 0..3 {
            assert_eq!(eg.weights().row(v), &[0.5, 0.5]);
        }
    }

    #[test]
    fn init_rejects_bad_eta() {
        assert!(ExpGrad::new(&dims(2, 1, 1), 1.5).is_err());
        assert!(ExpGrad::new(&dims(2, 1, 1), 0.0).is_err());
    }

    #[test]
    fn default_eta_values() {
        // sqrt(ln 2 / (0.718281828 * 100))
        let expected = (2f64.ln() / ((std::f64::consts::E - 2.0) * 100.0)).sqrt();
        assert!((expected - 0.09824).abs() < 5e-5);
        assert!((default_eta(&dims(2, 1, 100)) - expected).abs() < 1e-15);
        // pre-cap value quadruples the horizon -> halves eta
        let a = default_eta(&dims(10, 1, 1000));
        let b = default_eta(&dims(10, 1, 4000));
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(default_eta(&dims(2, 1, 1)) < 1.0);
        assert_eq!(default_eta(&dims(3, 1, 1)), 1.0);
    }

    #[test]
    fn allocation_is_prefix_sum() {
        let eg = ExpGrad::new(&dims(2, 3, 10), 0.5).unwrap();
        assert_eq!(eg.allocate(3).unwrap().amounts(), &[1.5, 1.5]);
        let w = WeightMatrix::from_rows(&[vec![1.0 - 1e-12, 1e-12], vec![1e-12, 1.0 - 1e-12]]).unwrap();
        let eg = ExpGrad::from_weights(w, 0.5).unwrap();
        let a = eg.allocate(2).unwrap();
        assert!((a.amounts()[0] - 1.0).abs() < 1e-9 && (a.amounts()[1] - 1.0).abs() < 1e-9);
        let w = WeightMatrix::from_rows(&[vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        let eg = ExpGrad::from_weights(w, 0.5).unwrap();
        let a = eg.allocate(1).unwrap();
        assert!((a.amounts()[0] - 0.2).abs() < 1e-12);
        assert!(eg.allocate(3).is_err());
    }

    #[test]
    fn equal_bits_leave_weights_unchanged() {
        let w = WeightMatrix::from_rows(&[vec![0.2, 0.3, 0.5]]).unwrap();
        let mut eg = ExpGrad::from_weights(w, 0.7).unwrap();
        eg.update(&[true, true, true], 1).unwrap();
        for (a, b) in eg.weights().row(0).iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn single_step_value() {
        let mut eg = ExpGrad::new(&dims(2, 1, 10), 2f64.ln()).unwrap();
        eg.update(&[true, false], 1).unwrap();
        let r = eg.weights().row(0);
        assert!((r[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((r[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rows_above_volume_untouched() {
        let mut eg = ExpGrad::new(&dims(3, 4, 10), 0.3).unwrap();
        eg.update(&[true, false, true], 2).unwrap();
        let before = eg.weights().clone();
        eg.update(&[false, true, true], 1).unwrap();
        for v in 1..4 {
            assert_eq!(eg.weights().row(v), before.row(v));
            assert_eq!(eg.weights().log_row(v), before.log_row(v));
        }
        // zero volume is a no-op
        let before = eg.weights().clone();
        eg.update(&[true, false, false], 0).unwrap();
        assert_eq!(&before, eg.weights());
        assert_eq!(eg.allocate(0).unwrap().amounts(), &[0.0; 3]);
    }

    #[test]
    fn observe_uses_only_fill_bits() {
        let d = dims(2, 2, 10);
        let mut a = ExpGrad::new(&d, 0.2).unwrap();
        let mut b = ExpGrad::new(&d, 0.2).unwrap();
        let alloc = a.allocate(2).unwrap();
        // two liquidity vectors with the same censored observation
        let o1 = censor_feedback(&alloc, &[5.0, 0.0]).unwrap();
        let o2 = censor_feedback(&alloc, &[9.0, 0.0]).unwrap();
        a.observe(&o1).unwrap();
        b.observe(&o2).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn permuting_venues_permutes_allocations(
            seq in proptest::collection::vec((0u32..=3, proptest::collection::vec(0u32..=4, 3)), 1..40)
        ) {
            let d = dims(3, 3, 40);
            let perm = [2usize, 0, 1];
            let mut a = ExpGrad::new(&d, 0.3).unwrap();
            let mut b = ExpGrad::new(&d, 0.3).unwrap();
            for (vol, s) in &seq {
                let sa: Vec<f64> = s.iter().map(|&x| x as f64).collect();
                let sb: Vec<f64> = perm.iter().map(|&p| sa[p]).collect();
                let xa = a.allocate(*vol).unwrap();
                let xb = b.allocate(*vol).unwrap();
                for (j, &p) in perm.iter().enumerate() {
                    prop_assert!((xb.amounts()[j] - xa.amounts()[p]).abs() < 1e-9);
                }
                a.observe(&censor_feedback(&xa, &sa).unwrap()).unwrap();
                b.observe(&censor_feedback(&xb, &sb).unwrap()).unwrap();
            }
        }

        #[test]
        fn rows_stay_normalized(bits in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 4), 1..200)) {
            let mut eg = ExpGrad::new(&dims(4, 3, 200), 1.0).unwrap();
            for b in &bits {
                eg.update(b, 3).unwrap();
            }
            for v in 0..3 {
                let row = eg.weights().row(v);
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(eg.weights().log_row(v).iter().all(|l| l.is_finite()));
            }
        }
    }
}

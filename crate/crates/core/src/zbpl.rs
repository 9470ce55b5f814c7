//! Zero-bin plus truncated power law liquidity model: `s = 0` with
//! probability `p0`, otherwise `s = k in 1..=s_max` with `P(k) ∝ k^-beta`.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZbplParams {
    pub p0: f64,
    pub beta: f64,
    pub s_max: u32,
}

impl ZbplParams {
    pub fn new(p0: f64, beta: f64, s_max: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::OutOfRange { name: "p0", value: p0 });
        }
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(Error::OutOfRange { name: "beta", value: beta });
        }
        if s_max == 0 {
            return Err(Error::OutOfRange { name: "s_max", value: 0.0 });
        }
        Ok(Self { p0, beta, s_max })
    }

    /// `P(s = k)` for `k = 0..=s_max`.
    pub fn pmf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.s_max as usize + 1);
        out.push(self.p0);
        let w: Vec<f64> = (1..=self.s_max).map(|k| (k as f64).powf(-self.beta)).collect();
        let z: f64 = w.iter().sum();
        out.extend(w.iter().map(|x| (1.0 - self.p0) * x / z));
        out
    }

    /// `P(s >= u)` for `u = 0..=upto`.
    pub fn tail(&self, upto: u32) -> Vec<f64> {
        let pmf = self.pmf();
        let mut tail = vec![0.0; pmf.len() + 1];
        for k in (0..pmf.len()).rev() {
            tail[k] = tail[k + 1] + pmf[k];
        }
        tail[0] = 1.0;
        (0..=upto as usize).map(|u| tail.get(u).copied().unwrap_or(0.0).clamp(0.0, 1.0)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.pmf().iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// `E min(u, s)`.
    pub fn expected_fill(&self, u: u32) -> f64 {
        self.tail(u).iter().skip(1).sum()
    }

    pub fn sampler(&self) -> ZbplSampler {
        ZbplSampler::new(self)
    }
}

/// Inverse-CDF sampler with a precomputed table.
#[derive(Debug, Clone, PartialEq)]
pub struct ZbplSampler {
    cdf: Vec<f64>,
}

impl ZbplSampler {
    pub fn new(params: &ZbplParams) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = params
            .pmf()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = f64::INFINITY;
        }
        Self { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u) as u32
    }
}

/// One draw from the model.
pub fn zbpl_sample<R: Rng + ?Sized>(params: &ZbplParams, rng: &mut R) -> u32 {
    params.sampler().sample(rng)
}

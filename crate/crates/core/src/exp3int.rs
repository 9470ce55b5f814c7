//! Integral allocations by randomized rounding of the exponentiated
//! gradient allocation, learning from an importance-weighted estimate of
//! the gradient.
//!
//! Each round the fractional allocation `alloc_i` is split into a floor
//! `f_i` and a fractional part `q_i`. The fractional parts are mixed with
//! the uniform marginal `m/K`, a subset of exactly `m` venues is sampled
//! with those marginals, and the sampled venues get `f_i + 1` shares. The
//! per-unit gradient is then estimated from the fills alone: units up to
//! `kappa_i` (the last unit whose cumulative weight fits inside the floor)
//! see `1(s_i >= f_i) - 1(s_i = f_i) 1(ceil played) / qbar_i`, the remaining
//! units up to `V^t` see `1(s_i >= f_i + 1) 1(ceil played) / qbar_i`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rounding::{mix_exploration, sample_subset, MarginalVector};
use crate::types::{
    FractionalAllocation, IntegralAllocation, ProblemDims, RoundOutcome, WeightMatrix, ALLOC_TOL,
};

/// Number of log-spaced exploration rates searched by [`default_parameters`].
pub const GAMMA_GRID_POINTS: usize = 64;
const GAMMA_GRID_MIN: f64 = 1e-4;
/// Constant of the variance correction term.
pub const VARIANCE_CORRECTION_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exp3Params {
    pub eta: f64,
    pub gamma: f64,
    /// Confidence parameter of the variance-corrected estimator; `None`
    /// runs the plain estimator.
    pub delta: Option<f64>,
}

impl Exp3Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::OutOfRange { name: "eta", value: self.eta });
        }
        if !(self.gamma > 0.0 && self.gamma <= 0.5) {
            return Err(Error::OutOfRange { name: "gamma", value: self.gamma });
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::OutOfRange { name: "delta", value: d });
            }
        }
        Ok(())
    }
}

/// `(V (ln K)^2 / (K T^2))^(1/3)`.
pub fn theorem_eta(dims: &ProblemDims) -> f64 {
    let (k, v, t) = (dims.venues as f64, dims.max_volume as f64, dims.horizon as f64);
    (v * k.ln().powi(2) / (k * t * t)).cbrt()
}

/// Expected-regret bound `V ln K / eta + 2 eta (TV + TVK/gamma + TK) + gamma T K`.
pub fn regret_bound(dims: &ProblemDims, eta: f64, gamma: f64) -> f64 {
    let (k, v, t) = (dims.venues as f64, dims.max_volume as f64, dims.horizon as f64);
    v * k.ln() / eta + 2.0 * eta * (t * v + t * v * k / gamma + t * k) + gamma * t * k
}

/// Largest rate with `eta * |estimate| <= 1`, given the worst-case
/// estimator magnitude `1 + K/gamma + correction_max`.
pub fn clamp_eta(eta: f64, venues: usize, gamma: f64, correction_max: f64) -> f64 {
    eta.min(1.0 / (1.0 + venues as f64 / gamma + correction_max)).min(1.0)
}

/// Largest correction `10 gamma / (K qbar) sqrt(ln 1/delta)` given
/// `qbar >= gamma / K`.
pub fn max_correction(delta: Option<f64>) -> f64 {
    delta.map_or(0.0, |d| VARIANCE_CORRECTION_SCALE * (1.0 / d).ln().sqrt())
}

/// The exploration grid: `GAMMA_GRID_POINTS` log-spaced points in `[1e-4, 1/2]`.
pub fn gamma_grid() -> Vec<f64> {
    let (lo, hi) = (GAMMA_GRID_MIN.ln(), 0.5f64.ln());
    (0..GAMMA_GRID_POINTS)
        .map(|j| (lo + (hi - lo) * j as f64 / (GAMMA_GRID_POINTS - 1) as f64).exp().min(0.5))
        .collect()
}

fn optimize(dims: &ProblemDims, delta: Option<f64>) -> Exp3Params {
    let base = theorem_eta(dims);
    let corr = max_correction(delta);
    let mut best: Option<(f64, Exp3Params)> = None;
    for gamma in gamma_grid() {
        let eta = clamp_eta(base, dims.venues, gamma, corr);
        let b = regret_bound(dims, eta, gamma);
        if best.is_none_or(|(bb, _)| b < bb) {
            best = Some((b, Exp3Params { eta, gamma, delta }));
        }
    }
    best.expect("grid is nonempty").1
}

/// Learning and exploration rates: the theorem's `eta`, and the grid point
/// `gamma` minimizing the regret bound, each grid point evaluated at its own
/// clamped `eta`.
pub fn default_parameters(dims: &ProblemDims) -> Exp3Params {
    optimize(dims, None)
}

/// As [`default_parameters`] for the variance-corrected estimator with
/// `delta = 1/T` (capped at 1/2 so that `ln(1/delta) > 0`).
pub fn default_parameters_corrected(dims: &ProblemDims) -> Exp3Params {
    let delta = (1.0 / dims.horizon as f64).min(0.5);
    optimize(dims, Some(delta))
}

/// Splits `alloc` into floors and fractional parts. Entries within
/// `ALLOC_TOL` of an integer are snapped to it.
pub fn decompose(alloc: &FractionalAllocation) -> Result<(Vec<u32>, MarginalVector)> {
    let mut floors = Vec::with_capacity(alloc.amounts().len());
    let mut frac = Vec::with_capacity(alloc.amounts().len());
    for &a in alloc.amounts() {
        let nearest = a.round();
        let (f, q) = if (a - nearest).abs() <= ALLOC_TOL { (nearest, 0.0) } else { (a.floor(), a - a.floor()) };
        floors.push(f as u32);
        frac.push(q);
    }
    let floor_sum: u64 = floors.iter().map(|&f| f as u64).sum();
    let m = alloc.volume() as f64 - floor_sum as f64;
    let q = MarginalVector::new(frac)?;
    if (q.mass() as f64 - m).abs() > 0.5 {
        return Err(Error::NonIntegralMass(m));
    }
    Ok((floors, q))
}

/// Plays `f_i + 1` on a subset drawn with marginals `mixed`, `f_i` elsewhere.
pub fn randomized_round<R: Rng + ?Sized>(
    floors: &[u32],
    mixed: &MarginalVector,
    rng: &mut R,
) -> Result<(IntegralAllocation, Vec<bool>)> {
    if floors.len() != mixed.len() {
        return Err(Error::DimensionMismatch { expected: floors.len(), got: mixed.len() });
    }
    let mut ceil = vec![false; floors.len()];
    for i in sample_subset(mixed, rng) {
        ceil[i] = true;
    }
    let alloc: Vec<u32> = floors.iter().zip(&ceil).map(|(&f, &c)| f + c as u32).collect();
    let volume = alloc.iter().sum();
    Ok((IntegralAllocation::new(alloc, volume)?, ceil))
}

/// `kappa_i`: the largest `v0 <= volume` with `sum_{v <= v0} x_i^v <= f_i`.
pub fn kappa(weights: &WeightMatrix, floors: &[u32], volume: u32) -> Vec<usize> {
    let k = weights.venues();
    let mut prefix = vec![0.0; k];
    let mut kappa = vec![0usize; k];
    let mut open = vec![true; k];
    for v in 0..volume as usize {
        let row = weights.row(v);
        for i in 0..k {
            if !open[i] {
                continue;
            }
            prefix[i] += row[i];
            if prefix[i] <= floors[i] as f64 + ALLOC_TOL {
                kappa[i] = v + 1;
            } else {
                open[i] = false;
            }
        }
    }
    kappa
}

/// Everything about a round's rounding that the gradient estimate needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingPlan {
    pub volume: u32,
    pub floors: Vec<u32>,
    pub fractional: MarginalVector,
    pub mixed: MarginalVector,
    pub kappa: Vec<usize>,
    pub ceil_played: Vec<bool>,
}

/// Per-venue gradient estimate: `lower[i]` for units `v <= kappa_i`,
/// `upper[i]` for `kappa_i < v <= V^t`, zero above the round volume.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub volume: u32,
    pub kappa: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl GradientEstimate {
    /// Estimate at venue `i`, unit `v` (1-based).
    pub fn at(&self, i: usize, v: usize) -> f64 {
        if v == 0 || v > self.volume as usize {
            0.0
        } else if v <= self.kappa[i] {
            self.lower[i]
        } else {
            self.upper[i]
        }
    }
}

/// Builds the estimate from the censored outcome only. With the ceiling
/// played, `r_i = min(f_i + 1, s_i)` reveals both `s_i >= f_i` and
/// `s_i = f_i`; with the floor played, `r_i = f_i` iff `s_i >= f_i` and the
/// importance-weighted terms vanish.
pub fn estimate_gradient(outcome: &RoundOutcome, plan: &RoundingPlan) -> Result<GradientEstimate> {
    let k = plan.floors.len();
    if outcome.venues() != k {
        return Err(Error::DimensionMismatch { expected: k, got: outcome.venues() });
    }
    let mut lower = vec![0.0; k];
    let mut upper = vec![0.0; k];
    for i in 0..k {
        let f = plan.floors[i] as f64;
        let r = outcome.consumed()[i];
        let qbar = plan.mixed.values()[i];
        if plan.ceil_played[i] && qbar > 0.0 {
            let at_least_floor = r >= f - 0.5;
            let exactly_floor = (r - f).abs() < 0.5;
            let reached_ceil = r >= f + 0.5;
            lower[i] = at_least_floor as u8 as f64 - exactly_floor as u8 as f64 / qbar;
            upper[i] = reached_ceil as u8 as f64 / qbar;
        } else {
            lower[i] = ((r - f).abs() < 0.5) as u8 as f64;
            upper[i] = 0.0;
        }
    }
    Ok(GradientEstimate { volume: plan.volume, kappa: plan.kappa.clone(), lower, upper })
}

/// Adds `10 gamma / (K qbar_i) sqrt(ln 1/delta)` at every active unit of
/// venue `i`. Venues with `qbar_i = 0` get no correction.
pub fn variance_correct(est: &GradientEstimate, mixed: &[f64], gamma: f64, delta: f64) -> GradientEstimate {
    let k = mixed.len() as f64;
    let scale = VARIANCE_CORRECTION_SCALE * gamma / k * (1.0 / delta).ln().sqrt();
    let mut out = est.clone();
    for (i, &qbar) in mixed.iter().enumerate() {
        let c = if qbar > 0.0 { scale / qbar } else { 0.0 };
        out.lower[i] += c;
        out.upper[i] += c;
    }
    out
}

/// Integral-allocation learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp3Int {
    weights: WeightMatrix,
    params: Exp3Params,
    max_volume: u32,
}

impl Exp3Int {
    pub fn new(dims: &ProblemDims, params: Exp3Params) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            weights: WeightMatrix::uniform(dims.max_volume as usize, dims.venues),
            params,
            max_volume: dims.max_volume,
        })
    }

    pub fn with_defaults(dims: &ProblemDims, variance_corrected: bool) -> Self {
        let params =
            if variance_corrected { default_parameters_corrected(dims) } else { default_parameters(dims) };
        Self::new(dims, params).expect("default parameters are valid")
    }

    pub fn params(&self) -> &Exp3Params {
        &self.params
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    /// Fractional allocation, rounding and sampling for one round.
    pub fn plan<R: Rng + ?Sized>(&self, volume: u32, rng: &mut R) -> Result<(IntegralAllocation, RoundingPlan)> {
        if volume > self.max_volume {
            return Err(Error::VolumeOutOfRange { volume, max: self.max_volume });
        }
        let alloc = FractionalAllocation::new(self.weights.prefix_allocation(volume), volume)?;
        let (floors, fractional) = decompose(&alloc)?;
        let mixed = mix_exploration(&fractional, self.params.gamma)?;
        let kappa = kappa(&self.weights, &floors, volume);
        let (played, ceil_played) = randomized_round(&floors, &mixed, rng)?;
        debug_assert_eq!(played.volume(), volume);
        let plan = RoundingPlan { volume, floors, fractional, mixed, kappa, ceil_played };
        Ok((played, plan))
    }

    /// Exponentiated-gradient step on the estimate built from `outcome`.
    pub fn update(&mut self, outcome: &RoundOutcome, plan: &RoundingPlan) -> Result<()> {
        let mut est = estimate_gradient(outcome, plan)?;
        if let Some(delta) = self.params.delta {
            est = variance_correct(&est, plan.mixed.values(), self.params.gamma, delta);
        }
        self.apply(&est);
        Ok(())
    }

    fn apply(&mut self, est: &GradientEstimate) {
        let eta = self.params.eta;
        let k = self.weights.venues();
        let log_lower: Vec<f64> = est.lower.iter().map(|g| eta * g).collect();
        let log_upper: Vec<f64> = est.upper.iter().map(|g| eta * g).collect();
        let lin_lower: Vec<f64> = log_lower.iter().map(|l| l.exp()).collect();
        let lin_upper: Vec<f64> = log_upper.iter().map(|l| l.exp()).collect();
        let mut log_f = vec![0.0; k];
        let mut lin_f = vec![0.0; k];
        for v in 0..est.volume as usize {
            for i in 0..k {
                if v < est.kappa[i] {
                    log_f[i] = log_lower[i];
                    lin_f[i] = lin_lower[i];
                } else {
                    log_f[i] = log_upper[i];
                    lin_f[i] = lin_upper[i];
                }
            }
            self.weights.scale_row(v, &log_f, &lin_f);
        }
    }

    /// One full round against an environment callback that turns the
    /// played allocation into a censored outcome.
    pub fn step<R, F>(&mut self, volume: u32, rng: &mut R, env: F) -> Result<RoundOutcome>
    where
        R: Rng + ?Sized,
        F: FnOnce(&IntegralAllocation) -> Result<RoundOutcome>,
    {
        let (played, plan) = self.plan(volume, rng)?;
        let outcome = env(&played)?;
        self.update(&outcome, &plan)?;
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::types::censor_feedback;

    fn dims(k: usize, v: u32, t: usize) -> ProblemDims {
        ProblemDims::new(k, v, t).unwrap()
    }

    fn frac(a: &[f64], vol: u32) -> FractionalAllocation {
        FractionalAllocation::new(a.to_vec(), vol).unwrap()
    }

    #[test]
    fn decompose_examples() {
        let (f, q) = decompose(&frac(&[2.3, 1.7], 4)).unwrap();
        assert_eq!(f, vec![2, 1]);
        assert!((q.values()[0] - 0.3).abs() < 1e-12 && (q.values()[1] - 0.7).abs() < 1e-12);
        assert_eq!(q.mass(), 1);

        let (f, q) = decompose(&frac(&[2.0, 1.0, 0.0], 3)).unwrap();
        assert_eq!(f, vec![2, 1, 0]);
        assert_eq!(q.mass(), 0);
        assert!(q.values().iter().all(|&x| x == 0.0));

        let (f, q) = decompose(&frac(&[0.25, 0.25, 0.25, 0.25, 1.0], 2)).unwrap();
        assert_eq!(f, vec![0, 0, 0, 0, 1]);
        assert_eq!(q.values(), &[0.25, 0.25, 0.25, 0.25, 0.0]);
        assert_eq!(q.mass(), 1);
    }

    #[test]
    fn decompose_snaps_roundoff() {
        let (f, q) = decompose(&frac(&[1.0 + 1e-12, 1.0 - 1e-12], 2)).unwrap();
        assert_eq!(f, vec![1, 1]);
        assert_eq!(q.mass(), 0);
    }

    #[test]
    fn rounding_with_zero_marginals_plays_floors() {
        let mixed = MarginalVector::new(vec![0.0, 0.0, 0.0]).unwrap();
        let (a, ceil) = randomized_round(&[1, 2, 0], &mixed, &mut seeded(1)).unwrap();
        assert_eq!(a.amounts(), &[1, 2, 0]);
        assert!(ceil.iter().all(|c| !c));
    }

    #[test]
    fn rounding_adds_exactly_m_units() {
        let mixed = MarginalVector::new(vec![0.5, 0.5]).unwrap();
        let mut rng = seeded(2);
        for _ in 0..1000 {
            let (a, ceil) = randomized_round(&[3, 1], &mixed, &mut rng).unwrap();
            assert_eq!(a.amounts().iter().sum::<u32>(), 5);
            assert_eq!(ceil.iter().filter(|&&c| c).count(), 1);
        }
    }

    #[test]
    fn two_point_expectation_matches_fractional_fill() {
        // E min(u, s) = min(f + qbar, s) for integer s
        for f in 0..4u32 {
            for s in 0..6u32 {
                for qbar in [0.0, 0.1, 0.5, 0.93] {
                    let e = qbar * (f as f64 + 1.0).min(s as f64) + (1.0 - qbar) * (f as f64).min(s as f64);
                    assert!((e - (f as f64 + qbar).min(s as f64)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn kappa_examples() {
        let w = WeightMatrix::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(kappa(&w, &[0, 1], 2)[0], 0);

        let w = WeightMatrix::uniform(3, 2);
        assert_eq!(kappa(&w, &[1, 1], 3), vec![2, 2]);

        let eps = 1e-13;
        let w = WeightMatrix::from_rows(&[vec![1.0 - eps, eps], vec![1.0 - eps, eps]]).unwrap();
        assert_eq!(kappa(&w, &[2, 0], 2)[0], 2);
    }

    fn plan_for(floors: Vec<u32>, q: Vec<f64>, qbar: Vec<f64>, kappa: Vec<usize>, ceil: Vec<bool>, vol: u32) -> RoundingPlan {
        RoundingPlan {
            volume: vol,
            floors,
            fractional: MarginalVector::new(q).unwrap(),
            mixed: MarginalVector::new(qbar).unwrap(),
            kappa,
            ceil_played: ceil,
        }
    }

    #[test]
    fn estimator_ceil_played_at_floor_liquidity() {
        // f = 1, qbar = 0.5, s = 1, ceil played (u = 2)
        let plan = plan_for(vec![1, 1], vec![0.5, 0.5], vec![0.5, 0.5], vec![1, 1], vec![true, false], 3);
        let played = IntegralAllocation::new(vec![2, 1], 3).unwrap();
        let o = censor_feedback(&played, &[1.0, 5.0]).unwrap();
        let g = estimate_gradient(&o, &plan).unwrap();
        assert_eq!(g.at(0, 1), -1.0);
        assert_eq!(g.at(0, 2), 0.0);
        // venue 2, ceil not played, s >= f
        assert_eq!(g.at(1, 1), 1.0);
        assert_eq!(g.at(1, 2), 0.0);
        assert_eq!(g.at(1, 4), 0.0);
    }

    #[test]
    fn estimator_floor_played_below_floor() {
        let plan = plan_for(vec![2, 0], vec![0.5, 0.5], vec![0.5, 0.5], vec![1, 0], vec![false, true], 3);
        let played = IntegralAllocation::new(vec![2, 1], 3).unwrap();
        let o = censor_feedback(&played, &[1.0, 4.0]).unwrap();
        let g = estimate_gradient(&o, &plan).unwrap();
        assert_eq!(g.lower[0], 0.0);
        assert_eq!(g.upper[0], 0.0);
        // venue 2: ceil played and filled
        assert_eq!(g.upper[1], 2.0);
    }

    #[test]
    fn estimator_is_unbiased_branchwise() {
        // enumerate both branches for a single venue and compare with 1(s >= f + 1)
        for f in 0..3u32 {
            for s in 0..6u32 {
                for qbar in [0.05, 0.3, 0.5, 0.99] {
                    let mut expected_lower = 0.0;
                    let mut expected_upper = 0.0;
                    for (ceil, w) in [(true, qbar), (false, 1.0 - qbar)] {
                        let plan = plan_for(vec![f, 0], vec![0.5, 0.5], vec![qbar, 1.0 - qbar], vec![1, 0], vec![ceil, !ceil], 4);
                        let u = f + ceil as u32;
                        let played = IntegralAllocation::new(vec![u, 4 - u], 4).unwrap();
                        let o = censor_feedback(&played, &[s as f64, 0.0]).unwrap();
                        let g = estimate_gradient(&o, &plan).unwrap();
                        expected_lower += w * g.lower[0];
                        expected_upper += w * g.upper[0];
                    }
                    let truth = (s > f) as u8 as f64;
                    assert!((expected_lower - truth).abs() < 1e-12);
                    assert!((expected_upper - truth).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn variance_correction_examples() {
        let est = GradientEstimate { volume: 2, kappa: vec![1, 0], lower: vec![1.0, 0.0], upper: vec![0.0, 2.0] };
        let same = variance_correct(&est, &[0.25, 0.75], 0.0, 0.5);
        assert_eq!(same, est);
        let corr = variance_correct(&est, &[0.25, 0.75], 0.5, (-1.0f64).exp());
        assert!((corr.lower[0] - 11.0).abs() < 1e-12);
        assert!((corr.upper[0] - 10.0).abs() < 1e-12);
        let c_small_q = corr.lower[0] - est.lower[0];
        let c_large_q = corr.lower[1] - est.lower[1];
        assert!(c_small_q > c_large_q && c_large_q > 0.0);
    }

    #[test]
    fn theorem_eta_example() {
        let eta = theorem_eta(&dims(5, 10, 1000));
        let expected = (10.0 * 5f64.ln().powi(2) / (5.0 * 1e6)).cbrt();
        assert!((eta - expected).abs() < 1e-15);
        assert!((eta - 0.0173).abs() < 5e-5);
    }

    #[test]
    fn default_parameters_minimize_grid_bound() {
        for d in [dims(5, 10, 1000), dims(2, 1, 50_000), dims(48, 50, 2000), dims(2, 1, 1)] {
            let p = default_parameters(&d);
            assert!(p.gamma > 0.0 && p.gamma <= 0.5);
            assert!(p.eta <= theorem_eta(&d) + 1e-15);
            assert!(p.eta * (1.0 + d.venues as f64 / p.gamma) <= 1.0 + 1e-12);
            let b = regret_bound(&d, p.eta, p.gamma);
            for g in gamma_grid() {
                let eta = clamp_eta(theorem_eta(&d), d.venues, g, 0.0);
                assert!(b <= regret_bound(&d, eta, g) + 1e-9);
            }
        }
        let hp = default_parameters_corrected(&dims(5, 10, 1000));
        assert_eq!(hp.delta, Some(1e-3));
        assert!(hp.eta * (1.0 + 5.0 / hp.gamma + max_correction(hp.delta)) <= 1.0 + 1e-12);
    }

    #[test]
    fn single_unit_round_plays_one_venue() {
        let d = dims(2, 1, 100);
        let mut alg = Exp3Int::with_defaults(&d, false);
        let mut rng = seeded(4);
        for _ in 0..100 {
            let (played, plan) = alg.plan(1, &mut rng).unwrap();
            assert_eq!(played.amounts().iter().sum::<u32>(), 1);
            assert_eq!(plan.kappa, vec![0, 0]);
            let o = censor_feedback(&played, &[1.0, 0.0]).unwrap();
            alg.update(&o, &plan).unwrap();
        }
        // venue 1 always fills, so its weight grows
        assert!(alg.weights().row(0)[0] > 0.5);
    }

    #[test]
    fn step_is_deterministic_and_feasible() {
        let d = dims(4, 7, 200);
        let run = |seed| {
            let mut alg = Exp3Int::with_defaults(&d, true);
            let mut rng = seeded(seed);
            let mut env = seeded(seed + 1000);
            let mut trace = Vec::new();
            for t in 0..200u32 {
                let vol = 1 + t % 7;
                let s: Vec<f64> = (0..4).map(|_| env.random_range(0..5) as f64).collect();
                let o = alg.step(vol, &mut rng, |a| {
                    assert_eq!(a.amounts().iter().sum::<u32>(), vol);
                    censor_feedback(a, &s)
                })
                .unwrap();
                trace.push(o);
            }
            (trace, alg)
        };
        let (a, alg_a) = run(3);
        let (b, alg_b) = run(3);
        assert_eq!(a, b);
        assert_eq!(alg_a, alg_b);
        for v in 0..7 {
            assert!((alg_a.weights().row(v).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn integral_allocation_round_needs_no_sampling() {
        // rows concentrated so that the allocation is integral
        let eps = 1e-14;
        let w = WeightMatrix::from_rows(&[vec![1.0 - eps, eps], vec![eps, 1.0 - eps]]).unwrap();
        let mut alg = Exp3Int::new(&dims(2, 2, 10), Exp3Params { eta: 0.1, gamma: 0.2, delta: None }).unwrap();
        alg.weights = w;
        let (played, plan) = alg.plan(2, &mut seeded(0)).unwrap();
        assert_eq!(played.amounts(), &[1, 1]);
        assert_eq!(plan.fractional.mass(), 0);
        assert_eq!(plan.kappa, vec![2, 2]);
    }
}

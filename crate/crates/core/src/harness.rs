//! Multi-trial experiment runner.
//!
//! Each trial owns its allocator, its algorithm stream (from the run seed)
//! and its environment (from the scenario seed), so trials run in parallel
//! and are folded back in trial order. The allocator only ever receives the
//! censored [`RoundOutcome`] of its own allocation.

use rayon::prelude::*;

use crate::allocator::{build_allocator, AlgorithmId};
use crate::comparator::prefix_comparator_values;
use crate::error::{Error, Result};
use crate::rng::TrialRngs;
use crate::simulator::{EnvironmentStream, Scenario};
use crate::types::{censor_feedback, Allocation, RoundOutcome};

/// Number of regret checkpoints when the volume varies.
pub const CHECKPOINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Compute the hindsight comparator for regret.
    pub track_regret: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { track_regret: true }
    }
}

/// Raw per-trial results plus statistics streamed across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    algorithm: AlgorithmId,
    venues: usize,
    horizon: usize,
    cum_rewards: Vec<Vec<f64>>,
    mean: Vec<f64>,
    m2: Vec<f64>,
    alloc_mean: Vec<f64>,
    regret_rounds: Vec<usize>,
    comparator: Vec<Vec<f64>>,
}

struct TrialResult {
    cum: Vec<f64>,
    alloc: Vec<f64>,
    comparator: Vec<f64>,
}

impl Trace {
    fn empty(algorithm: AlgorithmId, venues: usize, horizon: usize, regret_rounds: Vec<usize>) -> Self {
        Self {
            algorithm,
            venues,
            horizon,
            cum_rewards: Vec::new(),
            mean: vec![0.0; horizon],
            m2: vec![0.0; horizon],
            alloc_mean: vec![0.0; horizon * venues],
            regret_rounds,
            comparator: Vec::new(),
        }
    }

    fn push(&mut self, r: TrialResult) {
        let n = (self.cum_rewards.len() + 1) as f64;
        for (t, &x) in r.cum.iter().enumerate() {
            let delta = x - self.mean[t];
            self.mean[t] += delta / n;
            self.m2[t] += delta * (x - self.mean[t]);
        }
        for (m, &a) in self.alloc_mean.iter_mut().zip(&r.alloc) {
            *m += (a - *m) / n;
        }
        self.cum_rewards.push(r.cum);
        self.comparator.push(r.comparator);
    }

    pub fn algorithm(&self) -> AlgorithmId {
        self.algorithm
    }

    pub fn venues(&self) -> usize {
        self.venues
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn trials(&self) -> usize {
        self.cum_rewards.len()
    }

    /// Cumulative reward after each round of trial `trial`.
    pub fn cum_rewards(&self, trial: usize) -> &[f64] {
        &self.cum_rewards[trial]
    }

    /// Mean cumulative reward after round `t` (0-based).
    pub fn mean_cum_reward(&self, t: usize) -> f64 {
        self.mean[t]
    }

    /// Standard error of the mean cumulative reward after round `t`.
    pub fn stderr(&self, t: usize) -> f64 {
        let n = self.trials();
        if n < 2 {
            return 0.0;
        }
        (self.m2[t] / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    }

    pub fn final_mean(&self) -> f64 {
        self.mean[self.horizon - 1]
    }

    pub fn final_stderr(&self) -> f64 {
        self.stderr(self.horizon - 1)
    }

    /// Mean allocation of round `t` across trials.
    pub fn mean_allocation(&self, t: usize) -> &[f64] {
        &self.alloc_mean[t * self.venues..(t + 1) * self.venues]
    }

    /// Mean and standard error recomputed from the raw per-trial data.
    pub fn recomputed_stats(&self, t: usize) -> (f64, f64) {
        let xs: Vec<f64> = self.cum_rewards.iter().map(|c| c[t]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return (mean, 0.0);
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    /// Rounds (1-based) at which regret is available.
    pub fn regret_rounds(&self) -> &[usize] {
        &self.regret_rounds
    }

    /// Regret of trial `trial` at each of [`Trace::regret_rounds`].
    pub fn regret(&self, trial: usize) -> Vec<f64> {
        self.regret_rounds
            .iter()
            .zip(&self.comparator[trial])
            .map(|(&r, &c)| if r == 0 { 0.0 } else { c - self.cum_rewards[trial][r - 1] })
            .collect()
    }

    /// Regret at round `round` (1-based) averaged over trials, if tracked.
    pub fn mean_regret_at(&self, round: usize) -> Option<f64> {
        let j = self.regret_rounds.iter().position(|&r| r == round)?;
        let n = self.trials() as f64;
        Some((0..self.trials()).map(|k| self.regret(k)[j]).sum::<f64>() / n)
    }
}

fn regret_rounds(scenario: &Scenario, opts: RunOptions) -> Vec<usize> {
    if !opts.track_regret || scenario.continuous_only() {
        return Vec::new();
    }
    let t = scenario.horizon();
    if scenario.volumes.iter().all(|&v| v == scenario.volumes[0]) {
        return (1..=t).collect();
    }
    let step = t.div_ceil(CHECKPOINTS);
    let mut rounds: Vec<usize> = (1..=CHECKPOINTS).map(|j| (j * step).min(t)).collect();
    rounds.dedup();
    rounds
}

fn run_trial(
    id: AlgorithmId,
    scenario: &Scenario,
    seed: u64,
    trial: u64,
    rounds: &[usize],
) -> Result<TrialResult> {
    let mut alg = build_allocator(id, &scenario.dims)?;
    let mut rng = TrialRngs::for_trial(seed, trial).algorithm;
    let env = scenario.environment(trial)?;
    let (k, horizon) = (scenario.venues(), scenario.horizon());
    let mut cum = Vec::with_capacity(horizon);
    let mut alloc = Vec::with_capacity(horizon * k);
    let mut total = 0.0;
    for t in 0..horizon {
        let volume = scenario.volumes[t];
        let played = alg.allocate(volume, &mut rng)?;
        let outcome: RoundOutcome = match &env {
            EnvironmentStream::Oblivious(tr) => censor_feedback(&played, tr.liquidities(t))?,
            EnvironmentStream::Adaptive(e) => censor_feedback(&played, &e.respond(t, &played.venue_amounts())?)?,
        };
        alloc.extend_from_slice(outcome.allocation());
        total += outcome.reward();
        cum.push(total);
        alg.observe(&outcome)?;
    }
    let comparator = match (&env, rounds.is_empty()) {
        (EnvironmentStream::Oblivious(tr), false) => prefix_comparator_values(tr, rounds)?,
        _ => Vec::new(),
    };
    Ok(TrialResult { cum, alloc, comparator })
}

/// Runs `trials` independent trials of one algorithm.
pub fn run_experiment(id: AlgorithmId, scenario: &Scenario, trials: usize, seed: u64) -> Result<Trace> {
    run_experiment_with(id, scenario, trials, seed, RunOptions::default())
}

pub fn run_experiment_with(
    id: AlgorithmId,
    scenario: &Scenario,
    trials: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<Trace> {
    if trials == 0 {
        return Err(Error::InvalidDims("need at least one trial".into()));
    }
    scenario.validate()?;
    if scenario.continuous_only() && id.integral() {
        return Err(Error::ContinuousOnly(format!("scenario {} (with {id})", scenario.name)));
    }
    let rounds = regret_rounds(scenario, opts);
    let mut trace = Trace::empty(id, scenario.venues(), scenario.horizon(), rounds.clone());
    let chunk = 4 * rayon::current_num_threads().max(1);
    let mut start = 0;
    while start < trials {
        let end = (start + chunk).min(trials);
        let results: Vec<Result<TrialResult>> = (start..end)
            .into_par_iter()
            .map(|trial| run_trial(id, scenario, seed, trial as u64, &rounds))
            .collect();
        for r in results {
            trace.push(r?);
        }
        start = end;
    }
    Ok(trace)
}

/// One trace per algorithm, in the order given.
pub fn run_suite(ids: &[AlgorithmId], scenario: &Scenario, trials: usize, seed: u64) -> Result<Vec<Trace>> {
    ids.iter().map(|&id| run_experiment(id, scenario, trials, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{make_experts_reduction, make_iid, make_lower_bound, IidConfig, Liquidity, Segment};
    use crate::types::ProblemDims;
    use crate::zbpl::ZbplParams;

    /// Every venue holds at least one share each round (`p0 = 0`), and one
    /// share is traded per round.
    fn saturated(k: usize, t: usize) -> Scenario {
        let params = ZbplParams::new(0.0, 2.0, 10).unwrap();
        Scenario {
            name: "saturated".into(),
            kind: crate::simulator::ScenarioKind::Iid,
            dims: ProblemDims::new(k, 1, t).unwrap(),
            volumes: vec![1; t],
            liquidity: Liquidity::Segments((0..k).map(|i| Segment { venue: i, start: 1, end: t, params }).collect()),
            seed: 0,
            oscillation: None,
        }
    }

    #[test]
    fn saturated_liquidity_fills_everything() {
        let s = saturated(2, 30);
        for id in AlgorithmId::ALL {
            let tr = run_experiment(id, &s, 1, 3).unwrap();
            assert!((tr.final_mean() - 30.0).abs() < 1e-9, "{id}");
        }
    }

    #[test]
    fn runs_are_deterministic_and_streamed_stats_agree() {
        let s = make_iid(&IidConfig { venues: 4, horizon: 60, volume: 5, ..Default::default() }, 2).unwrap();
        for id in AlgorithmId::ALL {
            let a = run_experiment(id, &s, 7, 11).unwrap();
            let b = run_experiment(id, &s, 7, 11).unwrap();
            assert_eq!(a, b);
            for t in [0, 30, 59] {
                let (m, se) = a.recomputed_stats(t);
                assert!((m - a.mean_cum_reward(t)).abs() < 1e-9);
                assert!((se - a.stderr(t)).abs() < 1e-9);
            }
            for k in 0..a.trials() {
                assert!(a.cum_rewards(k).windows(2).all(|w| w[1] >= w[0]));
            }
            let alloc: f64 = a.mean_allocation(10).iter().sum();
            assert!((alloc - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn regret_at_the_end_matches_comparator() {
        let s = make_lower_bound(3, 2, 40, 0.2, 1).unwrap();
        let tr = run_experiment(AlgorithmId::Uniform, &s, 2, 0).unwrap();
        let trace = s.draw_trace(1).unwrap();
        let c = crate::comparator::hindsight_comparator(&trace).unwrap().value;
        assert_eq!(tr.regret(1).last().copied().unwrap(), c - tr.cum_rewards(1)[39]);
        assert_eq!(tr.regret_rounds().len(), 40);
    }

    #[test]
    fn varying_volume_uses_checkpoints() {
        let mut s = make_iid(&IidConfig { venues: 2, horizon: 45, volume: 3, ..Default::default() }, 2).unwrap();
        s.volumes = (0..45).map(|t| 1 + t as u32 % 3).collect();
        let tr = run_experiment(AlgorithmId::OptKm, &s, 2, 0).unwrap();
        assert_eq!(tr.regret_rounds().last(), Some(&45));
        assert!(tr.regret_rounds().len() <= CHECKPOINTS);
    }

    #[test]
    fn experts_reduction_is_continuous_only() {
        let s = make_experts_reduction(vec![vec![1.0, 0.5]; 20], 2).unwrap();
        assert!(matches!(run_experiment(AlgorithmId::Exp3Int, &s, 1, 0), Err(Error::ContinuousOnly(_))));
        let tr = run_experiment(AlgorithmId::ExpGrad, &s, 1, 0).unwrap();
        assert!(tr.regret_rounds().is_empty());
        // first round: split evenly, reward 1 + 0.5
        assert!((tr.cum_rewards(0)[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_trials_rejected() {
        let s = make_lower_bound(2, 1, 5, 0.1, 0).unwrap();
        assert!(run_experiment(AlgorithmId::Uniform, &s, 0, 0).is_err());
    }
}

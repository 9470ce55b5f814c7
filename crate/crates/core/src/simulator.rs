//! Environments: piecewise-stationary zero-bin power law venues, the
//! two-point lower-bound family, and the adaptive experts reduction.
//!
//! A [`Scenario`] is a pure description. Oblivious scenarios are turned
//! into a pre-drawn [`ObliviousTrace`] per trial, seeded from the scenario
//! seed and the trial index only, so algorithm randomness can never change
//! what the venues hold.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, TrialRngs};
use crate::types::ProblemDims;
use crate::zbpl::{ZbplParams, ZbplSampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Iid,
    Switching,
    LowerBound,
    ExpertsReduction,
}

impl ScenarioKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ScenarioKind::Iid => "iid",
            ScenarioKind::Switching => "switching",
            ScenarioKind::LowerBound => "lower_bound",
            ScenarioKind::ExpertsReduction => "experts_reduction",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "iid" => Some(ScenarioKind::Iid),
            "switching" => Some(ScenarioKind::Switching),
            "lower_bound" => Some(ScenarioKind::LowerBound),
            "experts_reduction" => Some(ScenarioKind::ExpertsReduction),
            _ => None,
        }
    }
}

/// Venue `venue` (0-based) draws from `params` in rounds `start..=end` (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub venue: usize,
    pub start: usize,
    pub end: usize,
    pub params: ZbplParams,
}

/// Oscillating exponents of the five-venue scenario: every half period
/// the extreme venues swap between the two extreme exponents, the middle
/// venues between the two mild ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationConfig {
    pub horizon: usize,
    pub period: usize,
    pub extreme_beta: (f64, f64),
    pub mild_beta: (f64, f64),
    pub p0: f64,
}

impl Default for OscillationConfig {
    fn default() -> Self {
        Self { horizon: 10_000, period: 2_000, extreme_beta: (1.2, 3.0), mild_beta: (1.6, 2.2), p0: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Liquidity {
    Segments(Vec<Segment>),
    /// Every venue holds `0` or `V`; the favored venue holds `V` with
    /// probability `1/2 + epsilon`, the others with probability `1/2`.
    TwoPoint { favored: usize, epsilon: f64 },
    /// `s_i^t = rho[t][i] * alloc_i^t`.
    Experts { rho: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub dims: ProblemDims,
    pub volumes: Vec<u32>,
    pub liquidity: Liquidity,
    pub seed: u64,
    pub oscillation: Option<OscillationConfig>,
}

/// Parameter ranges of the iid scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IidConfig {
    pub venues: usize,
    pub horizon: usize,
    pub volume: u32,
    pub p0_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// Truncation as a multiple of the volume.
    pub s_max_factor: u32,
}

impl Default for IidConfig {
    fn default() -> Self {
        Self { venues: 48, horizon: 2000, volume: 50, p0_range: (0.3, 0.9), beta_range: (1.2, 2.5), s_max_factor: 2 }
    }
}

/// The two parameter sets that trade places in the switching scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchConfig {
    pub horizon: usize,
    pub switch_after: usize,
    pub volume: u32,
    pub favorable: (f64, f64),
    pub unfavorable: (f64, f64),
    pub s_max: u32,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        Self {
            horizon: 25_000,
            switch_after: 12_500,
            volume: 20,
            favorable: (0.02, 1.05),
            unfavorable: (0.65, 4.0),
            s_max: 200,
        }
    }
}

fn segments_for_constant(venue: usize, horizon: usize, params: ZbplParams) -> Segment {
    Segment { venue, start: 1, end: horizon, params }
}

/// Venue parameters drawn uniformly from the configured ranges.
pub fn make_iid(config: &IidConfig, seed: u64) -> Result<Scenario> {
    let dims = ProblemDims::new(config.venues, config.volume, config.horizon)?;
    let mut rng = seeded(derive_seed(seed, u64::MAX));
    let s_max = config.s_max_factor * config.volume;
    let mut segments = Vec::with_capacity(config.venues);
    for i in 0..config.venues {
        let p0 = rng.random_range(config.p0_range.0..=config.p0_range.1);
        let beta = rng.random_range(config.beta_range.0..=config.beta_range.1);
        segments.push(segments_for_constant(i, config.horizon, ZbplParams::new(p0, beta, s_max)?));
    }
    Ok(Scenario {
        name: "iid".into(),
        kind: ScenarioKind::Iid,
        dims,
        volumes: vec![config.volume; config.horizon],
        liquidity: Liquidity::Segments(segments),
        seed,
        oscillation: None,
    })
}

/// Forty-eight iid venues over 2000 rounds.
pub fn make_iid48(seed: u64) -> Result<Scenario> {
    let mut s = make_iid(&IidConfig::default(), seed)?;
    s.name = "iid48".into();
    Ok(s)
}

pub fn make_switch(config: &SwitchConfig, seed: u64) -> Result<Scenario> {
    if config.switch_after == 0 || config.switch_after >= config.horizon {
        return Err(Error::InvalidScenario(format!(
            "switch round {} outside 1..{}",
            config.switch_after, config.horizon
        )));
    }
    let dims = ProblemDims::new(2, config.volume, config.horizon)?;
    let good = ZbplParams::new(config.favorable.0, config.favorable.1, config.s_max)?;
    let bad = ZbplParams::new(config.unfavorable.0, config.unfavorable.1, config.s_max)?;
    let (a, b) = (config.switch_after, config.horizon);
    let segments = vec![
        Segment { venue: 0, start: 1, end: a, params: good },
        Segment { venue: 0, start: a + 1, end: b, params: bad },
        Segment { venue: 1, start: 1, end: a, params: bad },
        Segment { venue: 1, start: a + 1, end: b, params: good },
    ];
    Ok(Scenario {
        name: "two_venue_switch".into(),
        kind: ScenarioKind::Switching,
        dims,
        volumes: vec![config.volume; config.horizon],
        liquidity: Liquidity::Segments(segments),
        seed,
        oscillation: None,
    })
}

/// Venue 1 favored for 12500 rounds, venue 2 for the next 12500.
pub fn make_two_venue_switch(seed: u64) -> Result<Scenario> {
    make_switch(&SwitchConfig::default(), seed)
}

/// Segments of the five-venue oscillation: venues 1 and 5 alternate
/// between the extreme exponents in opposite phase, venues 2 and 4 do the
/// same with the mild ones, venue 3 follows venue 1's mild phase.
pub fn oscillation_segments(config: &OscillationConfig, s_max: u32) -> Result<Vec<Segment>> {
    if config.period < 2 || config.horizon == 0 {
        return Err(Error::InvalidScenario("oscillation needs period >= 2 and horizon >= 1".into()));
    }
    let half = config.period / 2;
    let phases: [(bool, (f64, f64)); 5] = [
        (false, config.extreme_beta),
        (false, config.mild_beta),
        (false, config.mild_beta),
        (true, config.mild_beta),
        (true, config.extreme_beta),
    ];
    let mut segments = Vec::new();
    for (venue, &(flipped, (lo, hi))) in phases.iter().enumerate() {
        let mut start = 1;
        let mut block = 0usize;
        while start <= config.horizon {
            let end = (start + half - 1).min(config.horizon);
            let low = block.is_multiple_of(2) != flipped;
            let beta = if low { lo } else { hi };
            segments.push(Segment { venue, start, end, params: ZbplParams::new(config.p0, beta, s_max)? });
            start = end + 1;
            block += 1;
        }
    }
    Ok(segments)
}

pub fn make_five_venue_with(config: &OscillationConfig, seed: u64, volume: u32) -> Result<Scenario> {
    let dims = ProblemDims::new(5, volume, config.horizon)?;
    let segments = oscillation_segments(config, 2 * volume)?;
    Ok(Scenario {
        name: format!("five_venue_{volume}"),
        kind: ScenarioKind::Switching,
        dims,
        volumes: vec![volume; config.horizon],
        liquidity: Liquidity::Segments(segments),
        seed,
        oscillation: Some(*config),
    })
}

pub fn make_five_venue(seed: u64, volume: u32) -> Result<Scenario> {
    make_five_venue_with(&OscillationConfig::default(), seed, volume)
}

/// `epsilon = sqrt(K / (T V)) / 4`.
pub fn default_epsilon(dims: &ProblemDims) -> f64 {
    0.25 * (dims.venues as f64 / (dims.horizon as f64 * dims.max_volume as f64)).sqrt()
}

/// Two-point family with a favored venue drawn uniformly from the seed.
pub fn make_lower_bound(venues: usize, volume: u32, horizon: usize, epsilon: f64, seed: u64) -> Result<Scenario> {
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::OutOfRange { name: "epsilon", value: epsilon });
    }
    let dims = ProblemDims::new(venues, volume, horizon)?;
    let favored = seeded(derive_seed(seed, u64::MAX)).random_range(0..venues);
    Ok(Scenario {
        name: "lower_bound".into(),
        kind: ScenarioKind::LowerBound,
        dims,
        volumes: vec![volume; horizon],
        liquidity: Liquidity::TwoPoint { favored, epsilon },
        seed,
        oscillation: None,
    })
}

/// Adaptive reduction from prediction with expert advice: venue `i`
/// absorbs the fraction `rho[t][i]` of whatever it is sent.
pub fn make_experts_reduction(rho: Vec<Vec<f64>>, volume: u32) -> Result<Scenario> {
    let horizon = rho.len();
    let venues = rho.first().map_or(0, |r| r.len());
    let dims = ProblemDims::new(venues, volume, horizon)?;
    for row in &rho {
        if row.len() != venues {
            return Err(Error::DimensionMismatch { expected: venues, got: row.len() });
        }
        if let Some(&x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::OutOfRange { name: "rho", value: x });
        }
    }
    Ok(Scenario {
        name: "experts_reduction".into(),
        kind: ScenarioKind::ExpertsReduction,
        dims,
        volumes: vec![volume; horizon],
        liquidity: Liquidity::Experts { rho },
        seed: 0,
        oscillation: None,
    })
}

/// Pre-drawn volumes and liquidities of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ObliviousTrace {
    venues: usize,
    volumes: Vec<u32>,
    liquidity: Vec<f64>,
}

impl ObliviousTrace {
    pub fn new(volumes: Vec<u32>, liquidities: Vec<Vec<f64>>) -> Result<Self> {
        if volumes.len() != liquidities.len() || volumes.is_empty() {
            return Err(Error::DimensionMismatch { expected: volumes.len(), got: liquidities.len() });
        }
        let venues = liquidities[0].len();
        let mut flat = Vec::with_capacity(venues * volumes.len());
        for row in &liquidities {
            if row.len() != venues {
                return Err(Error::DimensionMismatch { expected: venues, got: row.len() });
            }
            flat.extend_from_slice(row);
        }
        Ok(Self { venues, volumes, liquidity: flat })
    }

    pub fn horizon(&self) -> usize {
        self.volumes.len()
    }

    pub fn venues(&self) -> usize {
        self.venues
    }

    pub fn volume(&self, t: usize) -> u32 {
        self.volumes[t]
    }

    pub fn volumes(&self) -> &[u32] {
        &self.volumes
    }

    /// Liquidities of round `t` (0-based).
    pub fn liquidities(&self, t: usize) -> &[f64] {
        &self.liquidity[t * self.venues..(t + 1) * self.venues]
    }
}

/// What a trial plays against.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentStream {
    Oblivious(ObliviousTrace),
    Adaptive(ExpertsEnvironment),
}

/// Liquidities that respond to the allocation of the same round.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertsEnvironment {
    rho: Vec<Vec<f64>>,
    volumes: Vec<u32>,
}

impl ExpertsEnvironment {
    pub fn horizon(&self) -> usize {
        self.volumes.len()
    }

    pub fn volume(&self, t: usize) -> u32 {
        self.volumes[t]
    }

    pub fn respond(&self, t: usize, allocation: &[f64]) -> Result<Vec<f64>> {
        let row = &self.rho[t];
        if allocation.len() != row.len() {
            return Err(Error::DimensionMismatch { expected: row.len(), got: allocation.len() });
        }
        Ok(row.iter().zip(allocation).map(|(r, a)| r * a).collect())
    }
}

impl Scenario {
    pub fn horizon(&self) -> usize {
        self.dims.horizon
    }

    pub fn venues(&self) -> usize {
        self.dims.venues
    }

    /// Continuous-only scenarios cannot be played by integral allocators.
    pub fn continuous_only(&self) -> bool {
        self.kind == ScenarioKind::ExpertsReduction
    }

    /// Checks the structural invariants: volumes within `[0, V]`, segments
    /// tiling `1..=T` for every venue, valid two-point parameters.
    pub fn validate(&self) -> Result<()> {
        let (k, v, t) = (self.dims.venues, self.dims.max_volume, self.dims.horizon);
        if self.volumes.len() != t {
            return Err(Error::InvalidScenario(format!("{} volumes for horizon {t}", self.volumes.len())));
        }
        if let Some(&bad) = self.volumes.iter().find(|&&x| x > v) {
            return Err(Error::VolumeOutOfRange { volume: bad, max: v });
        }
        match &self.liquidity {
            Liquidity::Segments(segs) => {
                for venue in 0..k {
                    let mut mine: Vec<&Segment> = segs.iter().filter(|s| s.venue == venue).collect();
                    mine.sort_by_key(|s| s.start);
                    let mut next = 1;
                    for s in mine {
                        if s.start != next || s.end < s.start || s.end > t {
                            return Err(Error::InvalidScenario(format!(
                                "venue {} segments do not tile 1..{t} (segment {}..{})",
                                venue + 1,
                                s.start,
                                s.end
                            )));
                        }
                        next = s.end + 1;
                    }
                    if next != t + 1 {
                        return Err(Error::InvalidScenario(format!("venue {} not covered up to round {t}", venue + 1)));
                    }
                }
                if let Some(s) = segs.iter().find(|s| s.venue >= k) {
                    return Err(Error::InvalidScenario(format!("segment for venue {} of {k}", s.venue + 1)));
                }
            }
            Liquidity::TwoPoint { favored, epsilon } => {
                if *favored >= k {
                    return Err(Error::InvalidScenario(format!("favored venue {} of {k}", favored + 1)));
                }
                if !(0.0..0.5).contains(epsilon) {
                    return Err(Error::OutOfRange { name: "epsilon", value: *epsilon });
                }
            }
            Liquidity::Experts { rho } => {
                if rho.len() != t || rho.iter().any(|r| r.len() != k) {
                    return Err(Error::InvalidScenario("rho must be T rows of K entries".into()));
                }
                if let Some(&x) = rho.iter().flatten().find(|x| !(0.0..=1.0).contains(*x)) {
                    return Err(Error::OutOfRange { name: "rho", value: x });
                }
            }
        }
        Ok(())
    }

    /// Draws the liquidity tensor of trial `trial`.
    pub fn draw_trace(&self, trial: u64) -> Result<ObliviousTrace> {
        let mut rng = TrialRngs::for_trial(self.seed, trial).environment;
        let (k, t) = (self.dims.venues, self.dims.horizon);
        let mut flat = vec![0.0; k * t];
        match &self.liquidity {
            Liquidity::Segments(segs) => {
                let mut per_venue: Vec<Vec<(usize, ZbplSampler)>> = vec![Vec::new(); k];
                let mut sorted = segs.clone();
                sorted.sort_by_key(|s| (s.venue, s.start));
                for s in &sorted {
                    per_venue[s.venue].push((s.end, ZbplSampler::new(&s.params)));
                }
                let mut cursor = vec![0usize; k];
                for round in 0..t {
                    for i in 0..k {
                        while per_venue[i][cursor[i]].0 < round + 1 {
                            cursor[i] += 1;
                        }
                        flat[round * k + i] = per_venue[i][cursor[i]].1.sample(&mut rng) as f64;
                    }
                }
            }
            Liquidity::TwoPoint { favored, epsilon } => {
                let v = self.dims.max_volume as f64;
                for round in 0..t {
                    for i in 0..k {
                        let p = if i == *favored { 0.5 + epsilon } else { 0.5 };
                        flat[round * k + i] = if rng.random::<f64>() < p { v } else { 0.0 };
                    }
                }
            }
            Liquidity::Experts { .. } => {
                return Err(Error::InvalidScenario("experts reduction is adaptive; it has no pre-drawn trace".into()))
            }
        }
        Ok(ObliviousTrace { venues: k, volumes: self.volumes.clone(), liquidity: flat })
    }

    pub fn environment(&self, trial: u64) -> Result<EnvironmentStream> {
        match &self.liquidity {
            Liquidity::Experts { rho } => {
                Ok(EnvironmentStream::Adaptive(ExpertsEnvironment { rho: rho.clone(), volumes: self.volumes.clone() }))
            }
            _ => Ok(EnvironmentStream::Oblivious(self.draw_trace(trial)?)),
        }
    }

    /// Per-venue parameters in force at round `t` (1-based).
    pub fn params_at(&self, venue: usize, t: usize) -> Option<ZbplParams> {
        match &self.liquidity {
            Liquidity::Segments(segs) => {
                segs.iter().find(|s| s.venue == venue && s.start <= t && t <= s.end).map(|s| s.params)
            }
            _ => None,
        }
    }

    /// Text form; see [`parse_scenario`] for the grammar.
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "kind = {}", self.kind.tag());
        let _ = writeln!(out, "venues = {}", self.dims.venues);
        let _ = writeln!(out, "max_volume = {}", self.dims.max_volume);
        let _ = writeln!(out, "horizon = {}", self.dims.horizon);
        let _ = writeln!(out, "seed = {}", self.seed);
        if self.volumes.iter().all(|&x| x == self.volumes[0]) {
            let _ = writeln!(out, "volume = {}", self.volumes[0]);
        } else {
            let list: Vec<String> = self.volumes.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "volumes = {}", list.join(","));
        }
        if let Some(o) = &self.oscillation {
            let _ = writeln!(out, "period = {}", o.period);
            let _ = writeln!(out, "extreme_beta = {},{}", o.extreme_beta.0, o.extreme_beta.1);
            let _ = writeln!(out, "mild_beta = {},{}", o.mild_beta.0, o.mild_beta.1);
            let _ = writeln!(out, "oscillation_p0 = {}", o.p0);
        }
        match &self.liquidity {
            Liquidity::Segments(segs) => {
                for s in segs {
                    let _ = writeln!(out, "\n[segment]");
                    let _ = writeln!(out, "venue = {}", s.venue + 1);
                    let _ = writeln!(out, "start = {}", s.start);
                    let _ = writeln!(out, "end = {}", s.end);
                    let _ = writeln!(out, "p0 = {}", s.params.p0);
                    let _ = writeln!(out, "beta = {}", s.params.beta);
                    let _ = writeln!(out, "s_max = {}", s.params.s_max);
                }
            }
            Liquidity::TwoPoint { favored, epsilon } => {
                let _ = writeln!(out, "favored = {}", favored + 1);
                let _ = writeln!(out, "epsilon = {epsilon}");
            }
            Liquidity::Experts { rho } => {
                for row in rho {
                    let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                    let _ = writeln!(out, "rho = {}", cells.join(","));
                }
            }
        }
        out
    }
}

#[derive(Default)]
struct SegmentDraft {
    line: usize,
    venue: Option<usize>,
    start: Option<usize>,
    end: Option<usize>,
    p0: Option<f64>,
    beta: Option<f64>,
    s_max: Option<u32>,
}

fn cfg_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| cfg_err(line, format!("invalid value for {key}: {value:?}")))
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|x| parse_num(line, key, x)).collect()
}

fn parse_pair(line: usize, key: &str, value: &str) -> Result<(f64, f64)> {
    match parse_list::<f64>(line, key, value)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(cfg_err(line, format!("{key} takes two comma-separated numbers"))),
    }
}

/// Parses the line-oriented scenario format.
///
/// ```text
/// # comment
/// name = my_run
/// kind = iid | switching | lower_bound | experts_reduction
/// venues = 2
/// max_volume = 10
/// horizon = 100
/// seed = 7
/// volume = 10              # or: volumes = v1,v2,...,vT
/// favored = 1              # lower_bound only (1-based)
/// epsilon = 0.05           # lower_bound only
/// rho = 0.5,1              # experts_reduction: one line per round
///
/// [segment]                # zbpl venues: one block per piece
/// venue = 1
/// start = 1
/// end = 100
/// p0 = 0.4
/// beta = 1.8
/// s_max = 20
/// ```
///
/// For oscillating scenarios the keys `period`, `extreme_beta = lo,hi`,
/// `mild_beta = lo,hi` and `oscillation_p0` may replace the segment blocks.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut name = None;
    let mut kind = None;
    let mut venues = None;
    let mut max_volume = None;
    let mut horizon = None;
    let mut seed = 0u64;
    let mut volume = None;
    let mut volumes = None;
    let mut favored = None;
    let mut epsilon = None;
    let mut rho: Vec<Vec<f64>> = Vec::new();
    let mut period = None;
    let mut extreme = None;
    let mut mild = None;
    let mut osc_p0 = None;
    let mut segments: Vec<SegmentDraft> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line != "[segment]" {
                return Err(cfg_err(line_no, format!("unknown block {line}")));
            }
            segments.push(SegmentDraft { line: line_no, ..Default::default() });
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| cfg_err(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(seg) = segments.last_mut() {
            match key {
                "venue" => {
                    let v: usize = parse_num(line_no, key, value)?;
                    if v == 0 {
                        return Err(cfg_err(line_no, "venues are numbered from 1"));
                    }
                    seg.venue = Some(v - 1);
                }
                "start" => seg.start = Some(parse_num(line_no, key, value)?),
                "end" => seg.end = Some(parse_num(line_no, key, value)?),
                "p0" => seg.p0 = Some(parse_num(line_no, key, value)?),
                "beta" => seg.beta = Some(parse_num(line_no, key, value)?),
                "s_max" => seg.s_max = Some(parse_num(line_no, key, value)?),
                _ => return Err(cfg_err(line_no, format!("unknown segment key {key}"))),
            }
            continue;
        }
        match key {
            "name" => name = Some(value.to_string()),
            "kind" => {
                kind = Some(ScenarioKind::from_tag(value).ok_or_else(|| cfg_err(line_no, format!("unknown kind {value}")))?)
            }
            "venues" => venues = Some(parse_num(line_no, key, value)?),
            "max_volume" => max_volume = Some(parse_num(line_no, key, value)?),
            "horizon" => horizon = Some(parse_num(line_no, key, value)?),
            "seed" => seed = parse_num(line_no, key, value)?,
            "volume" => volume = Some(parse_num::<u32>(line_no, key, value)?),
            "volumes" => volumes = Some(parse_list::<u32>(line_no, key, value)?),
            "favored" => {
                let f: usize = parse_num(line_no, key, value)?;
                if f == 0 {
                    return Err(cfg_err(line_no, "venues are numbered from 1"));
                }
                favored = Some(f - 1);
            }
            "epsilon" => epsilon = Some(parse_num::<f64>(line_no, key, value)?),
            "rho" => rho.push(parse_list(line_no, key, value)?),
            "period" => period = Some(parse_num::<usize>(line_no, key, value)?),
            "extreme_beta" => extreme = Some(parse_pair(line_no, key, value)?),
            "mild_beta" => mild = Some(parse_pair(line_no, key, value)?),
            "oscillation_p0" => osc_p0 = Some(parse_num::<f64>(line_no, key, value)?),
            _ => return Err(cfg_err(line_no, format!("unknown key {key}"))),
        }
    }

    let missing = |k: &str| cfg_err(0, format!("missing key {k}"));
    let kind = kind.ok_or_else(|| missing("kind"))?;
    let horizon: usize = match (horizon, &volumes) {
        (Some(h), _) => h,
        (None, Some(v)) => v.len(),
        (None, None) if kind == ScenarioKind::ExpertsReduction => rho.len(),
        _ => return Err(missing("horizon")),
    };
    let venues: usize = match venues {
        Some(k) => k,
        None if kind == ScenarioKind::ExpertsReduction => rho.first().map_or(0, |r| r.len()),
        None => return Err(missing("venues")),
    };
    let volumes = match (volume, volumes) {
        (Some(_), Some(_)) => return Err(cfg_err(0, "give either volume or volumes, not both")),
        (Some(v), None) => vec![v; horizon],
        (None, Some(list)) => list,
        (None, None) => return Err(missing("volume")),
    };
    let max_volume = max_volume.unwrap_or_else(|| volumes.iter().copied().max().unwrap_or(0));
    let dims = ProblemDims::new(venues, max_volume, horizon)?;

    let oscillation = match (period, extreme, mild) {
        (None, None, None) => None,
        (Some(period), Some(extreme_beta), Some(mild_beta)) => Some(OscillationConfig {
            horizon,
            period,
            extreme_beta,
            mild_beta,
            p0: osc_p0.unwrap_or(OscillationConfig::default().p0),
        }),
        _ => return Err(cfg_err(0, "period, extreme_beta and mild_beta go together")),
    };

    let liquidity = match kind {
        ScenarioKind::Iid | ScenarioKind::Switching => {
            if segments.is_empty() {
                match &oscillation {
                    Some(o) if venues == 5 => Liquidity::Segments(oscillation_segments(o, 2 * max_volume)?),
                    _ => return Err(cfg_err(0, "no [segment] blocks")),
                }
            } else {
                let mut out = Vec::with_capacity(segments.len());
                for d in segments {
                    let need = |k: &str| cfg_err(d.line, format!("segment missing {k}"));
                    let params = ZbplParams::new(
                        d.p0.ok_or_else(|| need("p0"))?,
                        d.beta.ok_or_else(|| need("beta"))?,
                        d.s_max.ok_or_else(|| need("s_max"))?,
                    )
                    .map_err(|e| cfg_err(d.line, e.to_string()))?;
                    out.push(Segment {
                        venue: d.venue.ok_or_else(|| need("venue"))?,
                        start: d.start.ok_or_else(|| need("start"))?,
                        end: d.end.ok_or_else(|| need("end"))?,
                        params,
                    });
                }
                Liquidity::Segments(out)
            }
        }
        ScenarioKind::LowerBound => Liquidity::TwoPoint {
            favored: favored.ok_or_else(|| missing("favored"))?,
            epsilon: epsilon.unwrap_or_else(|| default_epsilon(&dims)),
        },
        ScenarioKind::ExpertsReduction => Liquidity::Experts { rho },
    };

    let scenario = Scenario {
        name: name.unwrap_or_else(|| kind.tag().to_string()),
        kind,
        dims,
        volumes,
        liquidity,
        seed,
        oscillation,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Names accepted by [`builtin_scenario`].
pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("iid48", "48 iid zero-bin power law venues, T=2000, V=50"),
    ("two_venue_switch", "2 venues swapping parameters after round 12500, T=25000, V=20"),
    ("five_venue_200", "5 venues with oscillating exponents, V=200"),
    ("five_venue_400", "5 venues with oscillating exponents, V=400"),
    ("lower_bound", "two-point family, K=4, V=4, T=20000, default epsilon"),
    ("experts_reduction", "adaptive reduction from expert advice, K=4, V=1, T=2000 (continuous only)"),
];

pub fn builtin_scenario(name: &str, seed: u64) -> Result<Scenario> {
    match name {
        "iid48" => make_iid48(seed),
        "two_venue_switch" => make_two_venue_switch(seed),
        "five_venue_200" => make_five_venue(seed, 200),
        "five_venue_400" => make_five_venue(seed, 400),
        "lower_bound" => {
            let dims = ProblemDims::new(4, 4, 20_000)?;
            make_lower_bound(4, 4, 20_000, default_epsilon(&dims), seed)
        }
        "experts_reduction" => {
            let mut rng = seeded(derive_seed(seed, u64::MAX));
            let means: Vec<f64> = (0..4).map(|_| rng.random_range(0.2..0.8)).collect();
            let rho = (0..2000)
                .map(|_| means.iter().map(|&m| if rng.random::<f64>() < m { 1.0 } else { 0.0 }).collect())
                .collect();
            let mut s = make_experts_reduction(rho, 1)?;
            s.seed = seed;
            Ok(s)
        }
        _ => Err(Error::UnknownScenario(name.to_string())),
    }
}

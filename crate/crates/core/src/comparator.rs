//! The best fixed unit-to-venue assignment in hindsight.
//!
//! A fixed assignment sends unit `v` to venue `opt_v` in every round with
//! `V^t >= v`. If unit `v` is the `k`-th unit sent to venue `i`, it earns
//! `w(v, i, k) = #{t : V^t >= v, s_i^t >= k}`. With a constant volume the
//! weight does not depend on `v` and the optimum takes the `V` largest
//! per-venue counts. With varying volumes the weights form a Monge array in
//! `(v, k)`, so the optimum is a maximum-weight assignment of units to
//! `(venue, rank)` slots, solved exactly with the Hungarian method.

use crate::error::{Error, Result};
use crate::simulator::ObliviousTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorValue {
    /// `assignment[v]`: venue of unit `v + 1`.
    pub assignment: Vec<usize>,
    pub value: f64,
}

impl ComparatorValue {
    /// Units per venue in a round of volume `volume`.
    pub fn counts(&self, venues: usize, volume: u32) -> Vec<u32> {
        let mut c = vec![0; venues];
        for &i in self.assignment.iter().take(volume as usize) {
            c[i] += 1;
        }
        c
    }
}

/// Total reward of a fixed assignment over the trace.
pub fn fixed_assignment_reward(trace: &ObliviousTrace, assignment: &[usize]) -> f64 {
    let k = trace.venues();
    let mut total = 0.0;
    let mut u = vec![0u32; k];
    for t in 0..trace.horizon() {
        u.iter_mut().for_each(|x| *x = 0);
        for &i in assignment.iter().take(trace.volume(t) as usize) {
            u[i] += 1;
        }
        total += u.iter().zip(trace.liquidities(t)).map(|(&a, &s)| (a as f64).min(s)).sum::<f64>();
    }
    total
}

fn constant_volume(trace: &ObliviousTrace) -> Option<u32> {
    let v = trace.volume(0);
    trace.volumes().iter().all(|&x| x == v).then_some(v)
}

/// `#{t < rounds : s_i^t >= k}` for `k = 1..=cap`, flattened venue-major.
fn depth_counts(trace: &ObliviousTrace, rounds: usize, cap: u32) -> Vec<u64> {
    let (k, cap) = (trace.venues(), cap as usize);
    let mut counts = vec![0u64; k * cap];
    for t in 0..rounds {
        for (i, &s) in trace.liquidities(t).iter().enumerate() {
            let depth = (s.floor().max(0.0) as usize).min(cap);
            for c in &mut counts[i * cap..i * cap + depth] {
                *c += 1;
            }
        }
    }
    counts
}

fn greedy_units(counts: &[u64], venues: usize, cap: u32) -> (Vec<usize>, f64) {
    let cap = cap as usize;
    let mut used = vec![0usize; venues];
    let mut assignment = Vec::with_capacity(cap);
    let mut value = 0.0;
    for _ in 0..cap {
        let mut best = 0;
        let mut best_gain = -1.0;
        for (i, &u) in used.iter().enumerate() {
            let g = counts[i * cap + u] as f64;
            if g > best_gain {
                best = i;
                best_gain = g;
            }
        }
        used[best] += 1;
        assignment.push(best);
        value += best_gain;
    }
    (assignment, value)
}

/// Sum of the `take` largest entries.
fn top_sum(values: &mut [u64], take: usize) -> f64 {
    if take == 0 {
        return 0.0;
    }
    if take < values.len() {
        values.select_nth_unstable_by(take - 1, |a, b| b.cmp(a));
    }
    values[..take.min(values.len())].iter().sum::<u64>() as f64
}

/// Maximum-weight assignment of `n` rows to distinct columns of an
/// `n x m` matrix (`n <= m`). Returns the column of each row.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let m = weights[0].len();
    assert!(m >= n, "assignment needs at least as many columns as rows");
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = -weights[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            cols[p[j] - 1] = j - 1;
        }
    }
    cols
}

fn assignment_comparator(trace: &ObliviousTrace, rounds: usize) -> ComparatorValue {
    let k = trace.venues();
    let cap = trace.volumes()[..rounds].iter().copied().max().unwrap_or(0) as usize;
    if cap == 0 {
        return ComparatorValue { assignment: Vec::new(), value: 0.0 };
    }
    // hist[i][vol][depth]: rounds with V^t = vol and min(s_i^t, cap) = depth
    let stride = cap + 1;
    let mut table = vec![0u64; k * stride * stride];
    for t in 0..rounds {
        let vol = trace.volume(t) as usize;
        for (i, &s) in trace.liquidities(t).iter().enumerate() {
            let depth = (s.floor().max(0.0) as usize).min(cap);
            table[(i * stride + vol) * stride + depth] += 1;
        }
    }
    // suffix sums in both coordinates: table[i][v][d] = #{V^t >= v, s >= d}
    for i in 0..k {
        for vol in (0..stride).rev() {
            for d in (0..stride).rev() {
                let mut x = table[(i * stride + vol) * stride + d];
                if d + 1 < stride {
                    x += table[(i * stride + vol) * stride + d + 1];
                }
                if vol + 1 < stride {
                    x += table[(i * stride + vol + 1) * stride + d];
                }
                if d + 1 < stride && vol + 1 < stride {
                    x -= table[(i * stride + vol + 1) * stride + d + 1];
                }
                table[(i * stride + vol) * stride + d] = x;
            }
        }
    }
    let weights: Vec<Vec<f64>> = (1..=cap)
        .map(|unit| {
            (0..k * cap)
                .map(|col| {
                    let (i, rank) = (col / cap, col % cap + 1);
                    table[(i * stride + unit) * stride + rank] as f64
                })
                .collect()
        })
        .collect();
    let cols = max_weight_assignment(&weights);
    let assignment: Vec<usize> = cols.iter().map(|&c| c / cap).collect();
    let value = cols.iter().enumerate().map(|(row, &c)| weights[row][c]).sum();
    ComparatorValue { assignment, value }
}

fn check_nonempty(trace: &ObliviousTrace) -> Result<()> {
    if trace.horizon() == 0 || trace.venues() == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok(())
}

/// Best fixed assignment over the whole trace.
pub fn hindsight_comparator(trace: &ObliviousTrace) -> Result<ComparatorValue> {
    check_nonempty(trace)?;
    match constant_volume(trace) {
        Some(v) => {
            let counts = depth_counts(trace, trace.horizon(), v);
            let (assignment, value) = greedy_units(&counts, trace.venues(), v);
            Ok(ComparatorValue { assignment, value })
        }
        None => Ok(assignment_comparator(trace, trace.horizon())),
    }
}

/// Comparator value over the first `t` rounds for each `t` in `rounds`
/// (1-based, nondecreasing).
pub fn prefix_comparator_values(trace: &ObliviousTrace, rounds: &[usize]) -> Result<Vec<f64>> {
    check_nonempty(trace)?;
    if rounds.windows(2).any(|w| w[1] < w[0]) || rounds.iter().any(|&r| r > trace.horizon()) {
        return Err(Error::InvalidScenario("prefix rounds must be nondecreasing and within the horizon".into()));
    }
    let Some(v) = constant_volume(trace) else {
        return Ok(rounds.iter().map(|&r| if r == 0 { 0.0 } else { assignment_comparator(trace, r).value }).collect());
    };
    let (k, cap) = (trace.venues(), v as usize);
    let mut counts = vec![0u64; k * cap];
    let mut scratch = vec![0u64; k * cap];
    let mut out = Vec::with_capacity(rounds.len());
    let mut next = 0;
    for &r in rounds {
        while next < r {
            for (i, &s) in trace.liquidities(next).iter().enumerate() {
                let depth = (s.floor().max(0.0) as usize).min(cap);
                for c in &mut counts[i * cap..i * cap + depth] {
                    *c += 1;
                }
            }
            next += 1;
        }
        scratch.copy_from_slice(&counts);
        out.push(top_sum(&mut scratch, cap));
    }
    Ok(out)
}

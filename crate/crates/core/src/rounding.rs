//! Fixed-size subset sampling with prescribed inclusion probabilities.
//!
//! Given marginals `0 <= q_i < 1` summing to an integer `m`, a subset of
//! exactly `m` venues is drawn so that venue `i` is included with
//! probability `q_i`. [`sample_subset`] does this with sequential pivotal
//! rounding; [`greedy_distribution`] builds an explicit distribution over
//! `m`-subsets whose marginals match `q`.

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance on the integrality of `sum q_i`.
pub const MASS_TOL: f64 = 1e-7;
/// Values within this distance of 0 or 1 are treated as decided during
/// pivotal rounding.
const DECIDED_EPS: f64 = 1e-12;

/// Inclusion probabilities summing to an integer.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalVector {
    q: Vec<f64>,
    m: usize,
}

impl MarginalVector {
    /// Validates `q_i in [0, 1)` and snaps the mass to the nearest integer
    /// when it is within [`MASS_TOL`]. Entries within `MASS_TOL` below zero
    /// are clamped to zero.
    pub fn new(q: Vec<f64>) -> Result<Self> {
        let mut q = q;
        for (index, value) in q.iter_mut().enumerate() {
            if *value < 0.0 && *value >= -MASS_TOL {
                *value = 0.0;
            }
            if !(*value >= 0.0 && *value < 1.0) {
                return Err(Error::InvalidMarginal { index, value: *value });
            }
        }
        let sum: f64 = q.iter().sum();
        let m = sum.round();
        if (sum - m).abs() > MASS_TOL {
            return Err(Error::NonIntegralMass(sum));
        }
        Ok(Self { q, m: m as usize })
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn mass(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Draws a subset of exactly `q.mass()` venues with `P(i in S) = q_i`,
/// returned in increasing order.
///
/// Sequential pivotal method: a carrier coordinate is paired with the next
/// fractional coordinate and mass moves between the two until one of them
/// is 0 or 1; the move direction is chosen with probability proportional
/// to the magnitude of the opposite move, so each pairwise step preserves
/// both expectations. Zero entries are never visited, and an `m = 0` input
/// returns without touching the RNG.
pub fn sample_subset<R: Rng + ?Sized>(q: &MarginalVector, rng: &mut R) -> Vec<usize> {
    if q.m == 0 {
        return Vec::new();
    }
    let mut chosen = Vec::with_capacity(q.m);
    // (index, value) of the undecided carrier
    let mut carrier: Option<(usize, f64)> = None;
    for (j, &pj) in q.q.iter().enumerate() {
        if pj <= DECIDED_EPS {
            continue;
        }
        let Some((i, pi)) = carrier else {
            carrier = Some((j, pj));
            continue;
        };
        let total = pi + pj;
        let u: f64 = rng.random();
        if total < 1.0 {
            // one of the two drops to zero, the other carries `total`
            if u < pj / total {
                carrier = Some((j, total));
            } else {
                carrier = Some((i, total));
            }
        } else {
            // one of the two is selected, the other carries `total - 1`
            let rest = total - 1.0;
            if u < (1.0 - pj) / (2.0 - total) {
                chosen.push(i);
                carrier = Some((j, rest));
            } else {
                chosen.push(j);
                carrier = Some((i, rest));
            }
        }
        if let Some((c, value)) = carrier {
            if value >= 1.0 - DECIDED_EPS {
                chosen.push(c);
                carrier = None;
            } else if value <= DECIDED_EPS {
                carrier = None;
            }
        }
    }
    // any leftover carrier holds round-off around 0 or 1
    if let Some((c, value)) = carrier {
        if value > 0.5 {
            chosen.push(c);
        }
    }
    debug_assert_eq!(chosen.len(), q.m);
    chosen.sort_unstable();
    chosen
}

/// `q_i <- (1 - gamma) q_i + gamma m / K`; keeps the mass `m`.
pub fn mix_exploration(q: &MarginalVector, gamma: f64) -> Result<MarginalVector> {
    if !(0.0..=0.5).contains(&gamma) {
        return Err(Error::OutOfRange { name: "gamma", value: gamma });
    }
    let k = q.len() as f64;
    let floor = gamma * q.m as f64 / k;
    let mixed = q.q.iter().map(|&x| (1.0 - gamma) * x + floor).collect();
    Ok(MarginalVector { q: mixed, m: q.m })
}

/// An explicit distribution over `m`-subsets together with the gap between
/// its marginals and the target.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetDistribution {
    pub atoms: Vec<(Vec<usize>, f64)>,
    /// `q - marginals(atoms)`.
    pub residual: Vec<f64>,
}

impl SubsetDistribution {
    pub fn marginals(&self) -> Vec<f64> {
        self.marginals_over(self.residual.len())
    }

    fn marginals_over(&self, k: usize) -> Vec<f64> {
        let mut mu = vec![0.0; k];
        for (set, p) in &self.atoms {
            for &i in set {
                mu[i] += p;
            }
        }
        mu
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    /// Draws one atom.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[usize] {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (set, p) in &self.atoms {
            acc += p;
            if u < acc {
                return set;
            }
        }
        &self.atoms.last().expect("distribution has at least one atom").0
    }
}

/// The `m` largest entries of `score`, ties to the lowest index.
fn top_m(score: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..score.len()).collect();
    idx.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut set = idx[..m].to_vec();
    set.sort_unstable();
    set
}

/// Greedy construction of a distribution over `m`-subsets matching `q`.
///
/// Minimizes `|| sum_S p_S 1_S - q ||^2` over the convex hull of subset
/// indicator vectors with the min-norm-point (corral) variant of the greedy
/// scheme: each major step adds the subset of the `m` largest residual
/// coordinates, then the weights are re-fit on the active atoms. The
/// residual norm decreases at every major step, and reaches zero in
/// finitely many steps since `q` lies in the hull. Stops once adding an
/// atom would exceed `max_atoms`, when the residual norm drops to `tol`,
/// or when no subset improves the fit.
pub fn greedy_distribution(q: &MarginalVector, max_atoms: usize, tol: f64) -> SubsetDistribution {
    let k = q.len();
    let m = q.m;
    let max_atoms = max_atoms.max(1);
    // points are `1_S - q`, the target is the origin
    let point = |set: &[usize]| -> Vec<f64> {
        let mut p: Vec<f64> = q.q.iter().map(|x| -x).collect();
        for &i in set {
            p[i] += 1.0;
        }
        p
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let start = top_m(&q.q, m);
    let mut corral: Vec<(Vec<usize>, Vec<f64>)> = vec![(start.clone(), point(&start))];
    let mut lambda = vec![1.0];
    let mut x = corral[0].1.clone();

    let max_major = 20 * k + 100;
    for _ in 0..max_major {
        let xx = dot(&x, &x);
        if xx.sqrt() <= tol {
            break;
        }
        // vertex minimizing <x, p>: largest residual -x
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let set = top_m(&neg, m);
        let p = point(&set);
        if xx - dot(&x, &p) <= 1e-14 * xx.max(1.0) || corral.iter().any(|(s, _)| *s == set) {
            break;
        }
        if corral.len() + 1 > max_atoms {
            break;
        }
        corral.push((set, p));
        lambda.push(0.0);

        // minor cycles
        loop {
            let Some(alpha) = affine_minimizer(&corral.iter().map(|(_, p)| p.as_slice()).collect::<Vec<_>>())
            else {
                // degenerate corral: drop the newest atom and stop refining
                corral.pop();
                lambda.pop();
                break;
            };
            if alpha.iter().all(|&a| a > 1e-15) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-15 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let mut idx = 0;
            corral.retain(|_| {
                let keep = lambda[idx] > 1e-15;
                idx += 1;
                keep
            });
            lambda.retain(|&l| l > 1e-15);
            let s: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= s);
        }
        x = vec![0.0; k];
        for ((_, p), l) in corral.iter().zip(&lambda) {
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi += l * pi;
            }
        }
    }

    let atoms: Vec<(Vec<usize>, f64)> =
        corral.into_iter().zip(lambda).map(|((s, _), l)| (s, l.max(0.0))).collect();
    let total: f64 = atoms.iter().map(|(_, p)| p).sum();
    let atoms: Vec<(Vec<usize>, f64)> = atoms.into_iter().map(|(s, p)| (s, p / total)).collect();
    let mut dist = SubsetDistribution { atoms, residual: Vec::new() };
    let mu = dist.marginals_over(k);
    dist.residual = q.q.iter().zip(mu).map(|(a, b)| a - b).collect();
    dist
}

/// Affine combination `sum a_j = 1` of `points` with minimum norm.
fn affine_minimizer(points: &[&[f64]]) -> Option<Vec<f64>> {
    let n = points.len();
    if n == 1 {
        return Some(vec![1.0]);
    }
    // [G 1; 1^T 0] [a; mu] = [0; 1]
    let dim = n + 1;
    let mut a = vec![vec![0.0; dim + 1]; dim];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = points[i].iter().zip(points[j]).map(|(x, y)| x * y).sum();
        }
        a[i][n] = 1.0;
        a[n][i] = 1.0;
    }
    a[n][dim] = 1.0;
    let sol = solve_dense(a)?;
    Some(sol[..n].to_vec())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn mv(q: &[f64]) -> MarginalVector {
        MarginalVector::new(q.to_vec()).unwrap()
    }

    #[test]
    fn marginal_vector_validation() {
        assert!(MarginalVector::new(vec![0.5, 0.6]).is_err());
        assert!(MarginalVector::new(vec![1.0, 0.0]).is_err());
        assert!(MarginalVector::new(vec![-0.1, 0.1]).is_err());
        let q = MarginalVector::new(vec![0.3, 0.7 + 5e-8]).unwrap();
        assert_eq!(q.mass(), 1);
    }

    #[test]
    fn symmetric_pair_is_fair() {
        let q = mv(&[0.5, 0.5]);
        let mut rng = seeded(1);
        let n = 100_000;
        let mut first = 0;
        for _ in 0..n {
            let s = sample_subset(&q, &mut rng);
            assert_eq!(s.len(), 1);
            if s[0] == 0 {
                first += 1;
            }
        }
        let p = first as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn zero_mass_is_empty_and_consumes_nothing() {
        use rand::Rng;
        let q = mv(&[0.0, 0.0, 0.0]);
        let mut a = seeded(5);
        let mut b = seeded(5);
        assert!(sample_subset(&q, &mut a).is_empty());
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn four_venue_marginals() {
        let target = [0.3, 0.7, 0.4, 0.6];
        let q = mv(&target);
        let mut rng = seeded(11);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let s = sample_subset(&q, &mut rng);
            assert_eq!(s.len(), 2);
            for i in s {
                counts[i] += 1;
            }
        }
        for (c, p) in counts.iter().zip(target) {
            let freq = *c as f64 / n as f64;
            assert!((freq - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{freq} vs {p}");
        }
    }

    #[test]
    fn zero_entries_never_sampled() {
        let q = mv(&[0.0, 0.5, 0.0, 0.9, 0.6, 0.0]);
        let mut rng = seeded(3);
        for _ in 0..20_000 {
            let s = sample_subset(&q, &mut rng);
            assert_eq!(s.len(), 2);
            assert!(s.iter().all(|&i| i == 1 || i == 3 || i == 4));
        }
    }

    #[test]
    fn mixing_examples() {
        let q = mv(&[0.2, 0.8]);
        assert_eq!(mix_exploration(&q, 0.0).unwrap(), q);
        let mixed = mix_exploration(&q, 0.5).unwrap();
        assert!((mixed.values()[0] - 0.35).abs() < 1e-15);
        assert!((mixed.values()[1] - 0.65).abs() < 1e-15);
        assert!(mix_exploration(&q, 0.6).is_err());
        assert!(mix_exploration(&q, -0.1).is_err());
    }

    #[test]
    fn greedy_exact_three_venue() {
        let q = mv(&[0.5, 0.9, 0.6]);
        let d = greedy_distribution(&q, 10, 1e-12);
        assert!(d.residual_norm() < 1e-12);
        let prob = |s: &[usize]| d.atoms.iter().find(|(a, _)| a == s).map(|(_, p)| *p).unwrap_or(0.0);
        assert!((prob(&[0, 1]) - 0.4).abs() < 1e-12);
        assert!((prob(&[0, 2]) - 0.1).abs() < 1e-12);
        assert!((prob(&[1, 2]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn greedy_exact_pair() {
        let d = greedy_distribution(&mv(&[0.5, 0.5]), 2, 0.0);
        assert!(d.residual_norm() < 1e-15);
        assert_eq!(d.atoms.len(), 2);
    }

    #[test]
    fn greedy_permutation_symmetry() {
        let q = [0.15, 0.45, 0.7, 0.3, 0.4];
        let perm = [3usize, 0, 4, 1, 2];
        let qp: Vec<f64> = perm.iter().map(|&p| q[p]).collect();
        for atoms in 1..6 {
            let a = greedy_distribution(&mv(&q), atoms, 0.0);
            let b = greedy_distribution(&mv(&qp), atoms, 0.0);
            let mut ra: Vec<f64> = a.residual.iter().map(|r| r.abs()).collect();
            let mut rb: Vec<f64> = b.residual.iter().map(|r| r.abs()).collect();
            ra.sort_by(f64::total_cmp);
            rb.sort_by(f64::total_cmp);
            for (x, y) in ra.iter().zip(&rb) {
                assert!((x - y).abs() < 1e-9, "atoms={atoms}: {ra:?} vs {rb:?}");
            }
        }
    }

    #[test]
    fn greedy_sampling_follows_atoms() {
        let q = mv(&[0.5, 0.9, 0.6]);
        let d = greedy_distribution(&q, 10, 0.0);
        let mut rng = seeded(9);
        let n = 50_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            for &i in d.sample(&mut rng) {
                counts[i] += 1;
            }
        }
        for (c, p) in counts.iter().zip([0.5, 0.9, 0.6]) {
            let f = *c as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
        }
    }

    fn random_marginals() -> impl Strategy<Value = Vec<f64>> {
        (2usize..=24, any::<u64>()).prop_map(|(k, seed)| {
            use rand::Rng;
            let mut rng = seeded(seed);
            let m = rng.random_range(1..k);
            // scale uniform draws to mass m and redistribute any excess over 1
            let mut q: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
            loop {
                let s: f64 = q.iter().sum();
                q.iter_mut().for_each(|x| *x *= m as f64 / s);
                if q.iter().all(|&x| x < 0.999) {
                    break;
                }
                q.iter_mut().for_each(|x| *x = x.min(0.95));
            }
            q
        })
    }

    proptest! {
        #[test]
        fn cardinality_always_exact(q in random_marginals(), seed in any::<u64>()) {
            let q = mv(&q);
            let mut rng = seeded(seed);
            for _ in 0..200 {
                let s = sample_subset(&q, &mut rng);
                prop_assert_eq!(s.len(), q.mass());
                prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            }
        }

        #[test]
        fn mixing_preserves_mass_and_lower_bound(q in random_marginals(), gamma in 0.0f64..=0.5) {
            let q = mv(&q);
            let mixed = mix_exploration(&q, gamma).unwrap();
            let k = q.len() as f64;
            prop_assert_eq!(mixed.mass(), q.mass());
            prop_assert!((mixed.values().iter().sum::<f64>() - q.mass() as f64).abs() < 1e-9);
            for &x in mixed.values() {
                prop_assert!(x >= gamma * q.mass() as f64 / k - 1e-15);
                prop_assert!(x >= gamma / k - 1e-15);
                prop_assert!(x < 1.0);
                if gamma > 0.0 { prop_assert!(x > 0.0); }
            }
        }

        #[test]
        fn greedy_residual_monotone_and_bounded(q in random_marginals()) {
            let q = mv(&q);
            let k = q.len();
            let m = q.mass() as f64;
            let mut last = f64::INFINITY;
            for atoms in 1..=(k + 2) {
                let d = greedy_distribution(&q, atoms, 1e-12);
                prop_assert!(d.atoms.len() <= atoms);
                prop_assert!(d.atoms.iter().all(|(s, p)| s.len() == q.mass() && *p >= 0.0));
                prop_assert!((d.atoms.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-9);
                let norm = d.residual_norm();
                prop_assert!(norm <= last + 1e-12);
                // greedy rate with the hull diameter sqrt(2m)
                prop_assert!(norm <= (1e-12f64).max(2.0 * (2.0 * m).sqrt() / (atoms as f64).sqrt()) + 1e-12);
                last = norm;
            }
            prop_assert!(last < 1e-8, "residual {} with {} atoms", last, k + 2);
        }
    }
}

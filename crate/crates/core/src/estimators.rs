//! Statistics computed from a measurement histogram: the mode and its cut,
//! the expectation estimate, bootstrap mode confidence, normalized cut
//! variance and the dual acceptance gate.
//!
//! Every tie between bitstrings resolves to the lexicographically smallest
//! one. `Counts` iterates in that order, so "first maximum wins" implements
//! the rule everywhere.

use std::collections::{BTreeMap, HashMap};

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{QaoaError, Result};
use crate::graph::{Bitstring, MaxCutInstance};
use crate::rng::{derive_seed, rng_from};

/// Default number of bootstrap resamples.
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Measurement histogram. All stored counts are at least 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    histogram: BTreeMap<Bitstring, u64>,
    total: u64,
}

impl Counts {
    pub fn new() -> Self {
        Counts::default()
    }

    /// Builds a histogram; repeated keys are summed and zero counts rejected.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Bitstring, u64)>) -> Result<Self> {
        let mut counts = Counts::new();
        for (z, k) in pairs {
            if k == 0 {
                return Err(QaoaError::InvalidParams(format!("zero count for {z}")));
            }
            counts.add(z, k);
        }
        if counts.total == 0 {
            return Err(QaoaError::EmptyCounts);
        }
        Ok(counts)
    }

    pub fn add(&mut self, z: Bitstring, k: u64) {
        if k > 0 {
            *self.histogram.entry(z).or_insert(0) += k;
            self.total += k;
        }
    }

    pub fn merge(&mut self, other: &Counts) {
        for (z, k) in other.iter() {
            self.add(z, k);
        }
    }

    pub fn get(&self, z: &Bitstring) -> u64 {
        self.histogram.get(z).copied().unwrap_or(0)
    }

    /// Total shots `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct observed bitstrings `K`.
    pub fn distinct(&self) -> usize {
        self.histogram.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Entries in lexicographic bitstring order.
    pub fn iter(&self) -> impl Iterator<Item = (Bitstring, u64)> + '_ {
        self.histogram.iter().map(|(z, k)| (*z, *k))
    }
}

/// Cut values of observed bitstrings, each computed once.
#[derive(Debug, Default)]
pub struct CutCache {
    values: HashMap<Bitstring, f64>,
    evaluations: u64,
}

impl CutCache {
    pub fn new() -> Self {
        CutCache::default()
    }

    pub fn cut(&mut self, instance: &MaxCutInstance, z: Bitstring) -> Result<f64> {
        if let Some(&c) = self.values.get(&z) {
            return Ok(c);
        }
        let c = instance.cut_value(&z)?;
        self.values.insert(z, c);
        self.evaluations += 1;
        Ok(c)
    }

    /// Number of distinct cut evaluations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// Statistics for one evaluated parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub mode: Bitstring,
    pub mode_cut: f64,
    pub confidence: f64,
    #[serde(rename = "var_norm")]
    pub var_normalized: f64,
    #[serde(rename = "expectation")]
    pub expectation_estimate: f64,
    pub distinct: usize,
    pub shots: u64,
}

/// Most frequent bitstring.
pub fn mode_of(counts: &Counts) -> Result<Bitstring> {
    let mut best: Option<(Bitstring, u64)> = None;
    for (z, k) in counts.iter() {
        if best.is_none_or(|(_, bk)| k > bk) {
            best = Some((z, k));
        }
    }
    best.map(|(z, _)| z).ok_or(QaoaError::EmptyCounts)
}

/// Cut value of the mode.
pub fn map_objective(instance: &MaxCutInstance, counts: &Counts) -> Result<f64> {
    instance.cut_value(&mode_of(counts)?)
}

/// Shot-averaged cut value, computed over the distinct keys.
pub fn expectation_estimate(instance: &MaxCutInstance, counts: &Counts) -> Result<f64> {
    expectation_with_cache(instance, counts, &mut CutCache::new())
}

fn expectation_with_cache(
    instance: &MaxCutInstance,
    counts: &Counts,
    cache: &mut CutCache,
) -> Result<f64> {
    if counts.is_empty() {
        return Err(QaoaError::EmptyCounts);
    }
    let mut sum = 0.0;
    for (z, k) in counts.iter() {
        sum += k as f64 * cache.cut(instance, z)?;
    }
    Ok(sum / counts.total() as f64)
}

/// Bootstrap estimate of the probability that a multinomial resample of the
/// empirical distribution keeps the same mode.
///
/// Each replicate draws the resampled counts key by key from conditional
/// binomials, so the cost is `O(resamples * K)` rather than `O(resamples * N)`.
pub fn mode_confidence(counts: &Counts, resamples: usize, seed: u64) -> Result<f64> {
    if resamples == 0 {
        return Err(QaoaError::InvalidConfig(
            "bootstrap resamples must be at least 1".into(),
        ));
    }
    let mode = mode_of(counts)?;
    let keys: Vec<(Bitstring, u64)> = counts.iter().collect();
    let n = counts.total();
    let mut hits = 0usize;
    for b in 0..resamples {
        if bootstrap_mode(&keys, n, derive_seed(seed, &[b as u64])) == mode {
            hits += 1;
        }
    }
    Ok(hits as f64 / resamples as f64)
}

fn bootstrap_mode(keys: &[(Bitstring, u64)], n: u64, seed: u64) -> Bitstring {
    let mut rng = rng_from(seed);
    let mut remaining_shots = n;
    let mut remaining_mass = n;
    let mut best = (keys[0].0, 0u64);
    let mut first = true;
    for &(z, k) in keys {
        let draw = if remaining_shots == 0 {
            0
        } else if k == remaining_mass {
            remaining_shots
        } else {
            let p = k as f64 / remaining_mass as f64;
            Binomial::new(remaining_shots, p)
                .expect("probability lies in [0, 1]")
                .sample(&mut rng)
        };
        if first || draw > best.1 {
            best = (z, draw);
            first = false;
        }
        remaining_shots -= draw;
        remaining_mass -= k;
    }
    best.0
}

/// Empirical cut variance divided by `U_C^2`.
pub fn normalized_cut_variance(instance: &MaxCutInstance, counts: &Counts) -> Result<f64> {
    variance_with_cache(instance, counts, &mut CutCache::new())
}

fn variance_with_cache(
    instance: &MaxCutInstance,
    counts: &Counts,
    cache: &mut CutCache,
) -> Result<f64> {
    let (first, _) = counts.iter().next().ok_or(QaoaError::EmptyCounts)?;
    // Shifting by one observed value leaves the variance unchanged and makes
    // it exactly zero when every key shares a cut value.
    let reference = cache.cut(instance, first)?;
    let n = counts.total() as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (z, k) in counts.iter() {
        let d = cache.cut(instance, z)? - reference;
        let p = k as f64 / n;
        s1 += p * d;
        s2 += p * d * d;
    }
    let var = (s2 - s1 * s1).max(0.0);
    let bound = instance.total_weight();
    if bound == 0.0 {
        return Ok(0.0);
    }
    Ok(var / (bound * bound))
}

/// Accept iff the mode is confident enough and the cut spread small enough.
pub fn dual_gate(confidence: f64, var_normalized: f64, tau_conf: f64, tau_var: f64) -> bool {
    confidence >= tau_conf && var_normalized <= tau_var
}

/// All per-point statistics, sharing one cut cache.
pub fn evaluate_stats(
    instance: &MaxCutInstance,
    counts: &Counts,
    cache: &mut CutCache,
    resamples: usize,
    seed: u64,
) -> Result<EvalStats> {
    let mode = mode_of(counts)?;
    Ok(EvalStats {
        mode,
        mode_cut: cache.cut(instance, mode)?,
        confidence: mode_confidence(counts, resamples, seed)?,
        var_normalized: variance_with_cache(instance, counts, cache)?,
        expectation_estimate: expectation_with_cache(instance, counts, cache)?,
        distinct: counts.distinct(),
        shots: counts.total(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{random_regular, WeightScheme};
    use crate::simulator::{sample, OutcomeDistribution};
    use proptest::prelude::*;

    fn bs(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    fn counts(pairs: &[(&str, u64)]) -> Counts {
        Counts::from_pairs(pairs.iter().map(|(s, k)| (bs(s), *k))).unwrap()
    }

    fn edge() -> MaxCutInstance {
        MaxCutInstance::new(2, [(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn mode_examples() {
        assert_eq!(
            mode_of(&counts(&[("00", 10), ("11", 30), ("01", 5)])).unwrap(),
            bs("11")
        );
        assert_eq!(
            mode_of(&counts(&[("11", 10), ("00", 10)])).unwrap(),
            bs("00")
        );
        assert_eq!(mode_of(&counts(&[("10", 1)])).unwrap(), bs("10"));
        assert_eq!(mode_of(&Counts::new()), Err(QaoaError::EmptyCounts));
    }

    #[test]
    fn map_objective_examples() {
        let k3 = MaxCutInstance::complete(3).unwrap();
        assert_eq!(
            map_objective(&k3, &counts(&[("011", 7), ("000", 3)])).unwrap(),
            2.0
        );
        assert_eq!(map_objective(&k3, &counts(&[("000", 10)])).unwrap(), 0.0);
    }

    #[test]
    fn map_objective_on_petersen_optimum() {
        let outer = (0..5).map(|i| (i, (i + 1) % 5, 1.0));
        let spokes = (0..5).map(|i| (i, i + 5, 1.0));
        let inner = (0..5).map(|i| (i + 5, (i + 2) % 5 + 5, 1.0));
        let g = MaxCutInstance::new(10, outer.chain(spokes).chain(inner)).unwrap();
        let (z, _) = g.brute_force_optimum().unwrap();
        let c = sample(&OutcomeDistribution::point_mass(z), 50, 0).unwrap();
        assert_eq!(map_objective(&g, &c).unwrap(), 12.0);
    }

    #[test]
    fn expectation_examples() {
        let g = edge();
        assert_eq!(
            expectation_estimate(&g, &counts(&[("01", 40)])).unwrap(),
            1.0
        );
        assert_eq!(
            expectation_estimate(&g, &counts(&[("00", 50), ("01", 50)])).unwrap(),
            0.5
        );
    }

    #[test]
    fn expectation_converges_to_exact() {
        let g = random_regular(6, 3, 2)
            .unwrap()
            .assign_weights(WeightScheme::Uniform, 3);
        let mut probs: Vec<f64> = (0..64).map(|i| 1.0 + (i % 7) as f64).collect();
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        let d = OutcomeDistribution { n: 6, probs };
        let exact = crate::simulator::exact_expectation(&g, &d);
        let var: f64 = d
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * (g.cut_of_index(i as u64) - exact).powi(2))
            .sum();
        let shots = 100_000;
        let est = expectation_estimate(&g, &sample(&d, shots, 4).unwrap()).unwrap();
        assert!((est - exact).abs() <= 4.0 * (var / shots as f64).sqrt());
    }

    #[test]
    fn confidence_degenerate() {
        assert_eq!(
            mode_confidence(&counts(&[("01", 100)]), 200, 1).unwrap(),
            1.0
        );
        assert!(mode_confidence(&counts(&[("01", 100)]), 0, 1).is_err());
    }

    /// Exact probability that `00` remains the mode when resampling
    /// {00: a, 11: N - a}: with two keys the resample is binomial and ties
    /// go to `00`.
    fn two_key_exact(a: u64, n: u64) -> f64 {
        let p = a as f64 / n as f64;
        (0..=n)
            .filter(|&k| 2 * k >= n)
            .map(|k| binomial_pmf(n, k, p))
            .sum()
    }

    fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
        let ln_choose: f64 = (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum();
        (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
    }

    #[test]
    fn confidence_balanced_pair() {
        let exact = two_key_exact(50, 100);
        assert!((exact - 0.5398).abs() < 1e-3);
        let est = mode_confidence(&counts(&[("00", 50), ("11", 50)]), 200, 3).unwrap();
        assert!((est - 0.5).abs() <= 0.15, "estimate {est}");
        assert!((est - exact).abs() <= 4.0 * (exact * (1.0 - exact) / 200.0).sqrt());
    }

    #[test]
    fn confidence_dominant_mode() {
        let exact = two_key_exact(90, 100);
        assert!(exact > 0.999_999);
        let est = mode_confidence(&counts(&[("00", 90), ("11", 10)]), 500, 7).unwrap();
        assert!(est >= 0.99);
    }

    #[test]
    fn confidence_is_seeded() {
        let c = counts(&[("00", 30), ("01", 25), ("11", 20), ("10", 25)]);
        assert_eq!(
            mode_confidence(&c, 100, 9).unwrap(),
            mode_confidence(&c, 100, 9).unwrap()
        );
    }

    #[test]
    fn confidence_monotone_in_dominance() {
        // Move shots from the runner-up to the mode; average over seeds.
        let mut last = 0.0;
        for shift in 0..6u64 {
            let c = counts(&[
                ("00", 30 + 2 * shift),
                ("01", 28 - 2 * shift),
                ("10", 20),
                ("11", 22),
            ]);
            let mean: f64 = (0..20)
                .map(|s| mode_confidence(&c, 200, s).unwrap())
                .sum::<f64>()
                / 20.0;
            assert!(mean + 0.02 >= last, "shift {shift}: {mean} < {last}");
            last = mean;
        }
    }

    #[test]
    fn variance_examples() {
        let g = edge();
        assert_eq!(
            normalized_cut_variance(&g, &counts(&[("01", 9)])).unwrap(),
            0.0
        );
        let uniform = counts(&[("00", 25), ("01", 25), ("10", 25), ("11", 25)]);
        assert_eq!(normalized_cut_variance(&g, &uniform).unwrap(), 0.25);
        // Two different strings with equal cut.
        assert_eq!(
            normalized_cut_variance(&g, &counts(&[("01", 3), ("10", 8)])).unwrap(),
            0.0
        );
    }

    #[test]
    fn dual_gate_examples() {
        assert!(dual_gate(0.95, 0.01, 0.90, 0.02));
        assert!(!dual_gate(0.95, 0.05, 0.90, 0.02));
        assert!(!dual_gate(0.80, 0.01, 0.90, 0.02));
    }

    #[test]
    fn piecewise_flat_objective() {
        let k3 = MaxCutInstance::complete(3).unwrap();
        let a = counts(&[("011", 7), ("000", 3)]);
        let mut b = a.clone();
        b.add(bs("000"), 3);
        b.add(bs("101"), 5);
        assert_eq!(mode_of(&a).unwrap(), mode_of(&b).unwrap());
        assert_eq!(
            map_objective(&k3, &a).unwrap(),
            map_objective(&k3, &b).unwrap()
        );
    }

    #[test]
    fn evaluate_stats_caches_cuts() {
        let g = random_regular(6, 3, 1).unwrap();
        let c = sample(&OutcomeDistribution::uniform(6), 300, 2).unwrap();
        let mut cache = CutCache::new();
        let stats = evaluate_stats(&g, &c, &mut cache, 50, 3).unwrap();
        assert_eq!(cache.evaluations() as usize, c.distinct());
        assert_eq!(stats.mode_cut, g.cut_value(&stats.mode).unwrap());
        assert_eq!(stats.shots, 300);
        assert!(stats.var_normalized <= 0.25);
    }

    fn arb_counts(n: usize) -> impl Strategy<Value = Vec<(u64, u64)>> {
        proptest::collection::vec((0u64..(1 << n), 1u64..50), 1..20)
    }

    proptest! {
        #[test]
        fn variance_matches_two_pass(raw in arb_counts(6), seed in 0u64..20) {
            let g = random_regular(6, 3, seed).unwrap().assign_weights(WeightScheme::Uniform, seed);
            let c = Counts::from_pairs(raw.iter().map(|&(i, k)| (Bitstring::new(i, 6), k))).unwrap();
            let n = c.total() as f64;
            let mean: f64 = c.iter().map(|(z, k)| k as f64 * g.cut_value(&z).unwrap()).sum::<f64>() / n;
            let two_pass: f64 = c.iter()
                .map(|(z, k)| k as f64 * (g.cut_value(&z).unwrap() - mean).powi(2))
                .sum::<f64>() / n;
            let got = normalized_cut_variance(&g, &c).unwrap();
            let want = two_pass / g.total_weight().powi(2);
            prop_assert!((got - want).abs() < 1e-12);
            prop_assert!(got <= 0.25 + 1e-12);
        }

        #[test]
        fn merged_expectation_is_weighted_average(a in arb_counts(5), b in arb_counts(5)) {
            let g = random_regular(6, 3, 0).unwrap().assign_weights(WeightScheme::Uniform, 1);
            let ca = Counts::from_pairs(a.iter().map(|&(i, k)| (Bitstring::new(i, 6), k))).unwrap();
            let cb = Counts::from_pairs(b.iter().map(|&(i, k)| (Bitstring::new(i, 6), k))).unwrap();
            let mut merged = ca.clone();
            merged.merge(&cb);
            let ea = expectation_estimate(&g, &ca).unwrap();
            let eb = expectation_estimate(&g, &cb).unwrap();
            let (na, nb) = (ca.total() as f64, cb.total() as f64);
            let want = (na * ea + nb * eb) / (na + nb);
            prop_assert!((expectation_estimate(&g, &merged).unwrap() - want).abs() < 1e-12);
        }

        #[test]
        fn statistics_ignore_insertion_order(raw in arb_counts(6), seed in 0u64..100) {
            let g = random_regular(6, 3, 3).unwrap();
            let fwd = Counts::from_pairs(raw.iter().map(|&(i, k)| (Bitstring::new(i, 6), k))).unwrap();
            let rev = Counts::from_pairs(raw.iter().rev().map(|&(i, k)| (Bitstring::new(i, 6), k))).unwrap();
            let a = evaluate_stats(&g, &fwd, &mut CutCache::new(), 20, seed).unwrap();
            let b = evaluate_stats(&g, &rev, &mut CutCache::new(), 20, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

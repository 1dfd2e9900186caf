//! Tree-structured Parzen estimator over a box of independent dimensions.
//!
//! Observations are split into a "good" group (the top `gamma_q` fraction by
//! objective, maximizing) and a "bad" group. Each group gets a per-dimension
//! Gaussian mixture with one kernel per observation plus a uniform prior
//! component. Candidates are drawn from the good mixture and the one with the
//! largest `l(x) / g(x)` wins.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Trial;
use crate::error::{QaoaError, Result};
use crate::rng::rng_from;
use crate::simulator::QaoaParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TpeConfig {
    pub startup_trials: usize,
    pub gamma_q: f64,
    pub candidates_per_suggest: usize,
    pub bandwidth_floor: f64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        TpeConfig {
            startup_trials: 10,
            gamma_q: 0.25,
            candidates_per_suggest: 24,
            bandwidth_floor: 0.05,
        }
    }
}

impl TpeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.startup_trials < 1 || self.candidates_per_suggest < 1 {
            return Err(QaoaError::InvalidConfig(
                "startup_trials and candidates_per_suggest must be at least 1".into(),
            ));
        }
        if !(self.gamma_q > 0.0 && self.gamma_q < 1.0) {
            return Err(QaoaError::InvalidConfig(
                "gamma_q must lie in (0, 1)".into(),
            ));
        }
        if !(self.bandwidth_floor > 0.0) {
            return Err(QaoaError::InvalidConfig(
                "bandwidth_floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Half-open search intervals `[lo, hi)`, one per coordinate of `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds(pub Vec<(f64, f64)>);

impl Bounds {
    /// `β ∈ [0, π)` for the first `depth` coordinates, `γ ∈ [0, 2π)` after.
    pub fn qaoa(depth: usize) -> Self {
        let betas = std::iter::repeat_n((0.0, PI), depth);
        let gammas = std::iter::repeat_n((0.0, 2.0 * PI), depth);
        Bounds(betas.chain(gammas).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() || !self.0.len().is_multiple_of(2) {
            return Err(QaoaError::InvalidConfig(
                "bounds must cover an even, nonzero number of coordinates".into(),
            ));
        }
        if self
            .0
            .iter()
            .any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi))
        {
            return Err(QaoaError::InvalidConfig(
                "every interval must satisfy lo < hi".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(&self.0)
                .all(|(&x, &(lo, hi))| x >= lo && x < hi)
    }

    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.0
            .iter()
            .map(|&(lo, hi)| rng.gen_range(lo..hi))
            .collect()
    }
}

/// Splits `history` into the best `ceil(gamma_q * T)` trials and the rest.
/// Ties in objective go to the earlier trial.
pub fn split_good_bad(history: &[Trial], gamma_q: f64) -> (Vec<&Trial>, Vec<&Trial>) {
    if history.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let n_good = ((gamma_q * history.len() as f64).ceil() as usize).clamp(1, history.len());
    let mut order: Vec<&Trial> = history.iter().collect();
    order.sort_by(|a, b| b.y.total_cmp(&a.y).then(a.t.cmp(&b.t)));
    let bad = order.split_off(n_good);
    (order, bad)
}

/// One-dimensional Parzen mixture on `[lo, hi)` with a uniform prior component.
struct Parzen {
    centers: Vec<f64>,
    bandwidth: f64,
    lo: f64,
    hi: f64,
}

impl Parzen {
    fn fit(values: &[f64], lo: f64, hi: f64, floor: f64) -> Self {
        let n = values.len();
        let bandwidth = if n < 2 {
            (hi - lo).max(floor)
        } else {
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            // Scott's rule.
            (1.06 * var.sqrt() * (n as f64).powf(-0.2)).max(floor)
        };
        Parzen {
            centers: values.to_vec(),
            bandwidth,
            lo,
            hi,
        }
    }

    fn density(&self, x: f64) -> f64 {
        let weight = 1.0 / (self.centers.len() + 1) as f64;
        let norm = 1.0 / (self.bandwidth * (2.0 * PI).sqrt());
        let kernels: f64 = self
            .centers
            .iter()
            .map(|c| norm * (-0.5 * ((x - c) / self.bandwidth).powi(2)).exp())
            .sum();
        weight * (kernels + 1.0 / (self.hi - self.lo))
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let pick = rng.gen_range(0..=self.centers.len());
        if pick == self.centers.len() {
            return rng.gen_range(self.lo..self.hi);
        }
        let normal =
            Normal::new(self.centers[pick], self.bandwidth).expect("bandwidth is positive");
        for _ in 0..64 {
            let x = normal.sample(rng);
            if x >= self.lo && x < self.hi {
                return x;
            }
        }
        rng.gen_range(self.lo..self.hi)
    }
}

/// Proposes the next parameter point.
pub fn suggest(
    history: &[Trial],
    bounds: &Bounds,
    cfg: &TpeConfig,
    seed: u64,
) -> Result<QaoaParams> {
    bounds.validate()?;
    cfg.validate()?;
    let mut rng = rng_from(seed);
    if history.len() < cfg.startup_trials {
        return QaoaParams::from_theta(&bounds.sample_uniform(&mut rng));
    }
    if let Some(bad_dim) = history.iter().find(|t| t.params.dim() != bounds.dim()) {
        return Err(QaoaError::InvalidParams(format!(
            "trial {} has dimension {} but bounds have {}",
            bad_dim.t,
            bad_dim.params.dim(),
            bounds.dim()
        )));
    }

    let (good, bad) = split_good_bad(history, cfg.gamma_q);
    let thetas = |group: &[&Trial]| group.iter().map(|t| t.params.theta()).collect::<Vec<_>>();
    let (good_theta, bad_theta) = (thetas(&good), thetas(&bad));

    let models: Vec<(Parzen, Parzen)> = bounds
        .0
        .iter()
        .enumerate()
        .map(|(d, &(lo, hi))| {
            let column = |rows: &[Vec<f64>]| rows.iter().map(|r| r[d]).collect::<Vec<_>>();
            (
                Parzen::fit(&column(&good_theta), lo, hi, cfg.bandwidth_floor),
                Parzen::fit(&column(&bad_theta), lo, hi, cfg.bandwidth_floor),
            )
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..cfg.candidates_per_suggest {
        let candidate: Vec<f64> = models.iter().map(|(l, _)| l.sample(&mut rng)).collect();
        let score: f64 = candidate
            .iter()
            .zip(&models)
            .map(|(&x, (l, g))| l.density(x).ln() - g.density(x).ln())
            .sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, candidate));
        }
    }
    let (_, theta) = best.expect("at least one candidate");
    QaoaParams::from_theta(&theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Bitstring;
    use crate::rng::derive_seed;

    fn trial(t: usize, theta: &[f64], y: f64) -> Trial {
        Trial {
            t,
            params: QaoaParams::from_theta(theta).unwrap(),
            y,
            mode: Bitstring::zeros(2),
            mode_cut: y,
            shots_used: 1,
            accepted: true,
            confidence: None,
            var_normalized: None,
        }
    }

    #[test]
    fn split_examples() {
        let history: Vec<Trial> = (1..=10).map(|t| trial(t, &[0.1, 0.2], t as f64)).collect();
        let (good, bad) = split_good_bad(&history, 0.25);
        assert_eq!(good.len(), 3);
        assert_eq!(bad.len(), 7);
        assert_eq!(good.iter().map(|t| t.t).collect::<Vec<_>>(), vec![10, 9, 8]);

        let one = [trial(1, &[0.1, 0.2], 0.0)];
        let (good, bad) = split_good_bad(&one, 0.25);
        assert_eq!(good.len(), 1);
        assert!(bad.is_empty());

        let flat: Vec<Trial> = (1..=8).map(|t| trial(t, &[0.1, 0.2], 1.0)).collect();
        let (good, _) = split_good_bad(&flat, 0.25);
        assert_eq!(good.iter().map(|t| t.t).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn startup_points_are_uniform_in_bounds() {
        let bounds = Bounds::qaoa(1);
        let cfg = TpeConfig::default();
        let mut beta_low = 0;
        for seed in 0..400 {
            let p = suggest(&[], &bounds, &cfg, seed).unwrap();
            assert!(bounds.contains(&p.theta()));
            if p.betas[0] < PI / 2.0 {
                beta_low += 1;
            }
        }
        // Binomial(400, 0.5): 4σ = 40.
        assert!((beta_low as i64 - 200).abs() < 40);
    }

    #[test]
    fn degenerate_history_stays_in_bounds() {
        let bounds = Bounds::qaoa(2);
        let history: Vec<Trial> = (1..=20)
            .map(|t| trial(t, &[0.5, 0.5, 1.0, 1.0], 3.0))
            .collect();
        for seed in 0..50 {
            let p = suggest(&history, &bounds, &TpeConfig::default(), seed).unwrap();
            assert!(bounds.contains(&p.theta()));
        }
    }

    #[test]
    fn rejects_empty_bounds() {
        assert!(suggest(&[], &Bounds(vec![]), &TpeConfig::default(), 0).is_err());
        assert!(suggest(
            &[],
            &Bounds(vec![(1.0, 1.0), (0.0, 1.0)]),
            &TpeConfig::default(),
            0
        )
        .is_err());
    }

    /// Sharp 2-D peak at (β, γ) = (1.5, 3.0). The top decile of the box by
    /// objective is the disk of area 0.1 · 2π² around the peak.
    #[test]
    fn concentrates_on_sharp_optimum() {
        let peak = [1.5, 3.0];
        let f = |x: &[f64]| {
            (-((x[0] - peak[0]).powi(2) + (x[1] - peak[1]).powi(2)) / (2.0 * 0.3f64.powi(2))).exp()
        };
        let radius = (0.1 * 2.0 * PI * PI / PI).sqrt();
        let inside =
            |x: &[f64]| ((x[0] - peak[0]).powi(2) + (x[1] - peak[1]).powi(2)).sqrt() <= radius;

        // Monte Carlo check that the disk is the top decile.
        let bounds = Bounds::qaoa(1);
        let mut rng = rng_from(1);
        let mut vals: Vec<f64> = (0..20_000)
            .map(|_| f(&bounds.sample_uniform(&mut rng)))
            .collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let cutoff = vals[2_000];
        let edge_value = (-(radius * radius) / (2.0 * 0.09)).exp();
        assert!((cutoff - edge_value).abs() < 0.02 * edge_value.max(1e-3) + 1e-3);

        let cfg = TpeConfig::default();
        let mut tpe_hits = 0;
        let mut random_hits = 0;
        for run in 0..5u64 {
            let mut history = Vec::new();
            for t in 1..=80 {
                let p = suggest(&history, &bounds, &cfg, derive_seed(run, &[t as u64])).unwrap();
                let theta = p.theta();
                if t > 60 && inside(&theta) {
                    tpe_hits += 1;
                }
                history.push(trial(t, &theta, f(&theta)));
            }
            let mut rng = rng_from(derive_seed(run, &[999]));
            random_hits += (0..20)
                .filter(|_| inside(&bounds.sample_uniform(&mut rng)))
                .count();
        }
        assert!(tpe_hits as f64 >= 0.6 * 100.0, "TPE hits {tpe_hits}/100");
        assert!(
            tpe_hits > 2 * random_hits,
            "random search hits {random_hits}/100"
        );
    }
}

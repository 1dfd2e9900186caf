//! Adaptive per-point evaluation: a pilot batch, the dual acceptance gate,
//! geometric batch growth and a per-point shot cap.

use serde::{Deserialize, Serialize};

use crate::error::{QaoaError, Result};
use crate::estimators::{
    dual_gate, evaluate_stats, Counts, CutCache, EvalStats, DEFAULT_BOOTSTRAP,
};
use crate::graph::MaxCutInstance;
use crate::resources::ResourceLedger;
use crate::rng::{derive_seed, stream};
use crate::simulator::{sample, NoiseSpec, OutcomeDistribution, QaoaParams, QaoaSimulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    /// Pilot batch `b_1`.
    pub pilot: u64,
    /// Batch growth factor `ρ > 1`.
    pub growth: f64,
    /// Per-point cap `N_max`.
    pub cap: u64,
    pub tau_conf: f64,
    pub tau_var: f64,
    /// Bootstrap resamples `B`.
    pub bootstrap: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            pilot: 100,
            growth: 2.0,
            cap: 1200,
            tau_conf: 0.90,
            tau_var: 0.02,
            bootstrap: DEFAULT_BOOTSTRAP,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(QaoaError::InvalidConfig(msg.to_string()));
        if self.pilot < 1 || self.pilot > self.cap {
            return bad("pilot batch must satisfy 1 <= pilot <= cap");
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return bad("growth factor must exceed 1");
        }
        if !(self.tau_conf > 0.0 && self.tau_conf <= 1.0) {
            return bad("tau_conf must lie in (0, 1]");
        }
        if !(self.tau_var >= 0.0) {
            return bad("tau_var must be nonnegative");
        }
        if self.bootstrap < 1 {
            return bad("bootstrap resamples must be at least 1");
        }
        Ok(())
    }
}

/// One adaptively evaluated parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEvaluation {
    pub params: QaoaParams,
    pub counts: Counts,
    pub stats: EvalStats,
    pub shots_used: u64,
    pub accepted: bool,
    pub rounds: usize,
    pub batches: Vec<u64>,
}

/// Size of the next batch: `min(round(ρ b), N_max - spent)`, rounding half
/// to even.
pub fn next_batch(current: u64, spent: u64, cfg: &AdaptiveConfig) -> Result<u64> {
    if spent >= cfg.cap {
        return Err(QaoaError::InvalidConfig(format!(
            "point budget exhausted: spent {spent} of {}",
            cfg.cap
        )));
    }
    let grown = (cfg.growth * current as f64).round_ties_even().max(1.0) as u64;
    Ok(grown.min(cfg.cap - spent))
}

/// The full batch schedule when the gate never accepts.
pub fn batch_schedule(cfg: &AdaptiveConfig) -> Result<Vec<u64>> {
    cfg.validate()?;
    let mut batches = vec![cfg.pilot];
    let mut spent = cfg.pilot;
    while spent < cfg.cap {
        let b = next_batch(*batches.last().expect("nonempty"), spent, cfg)?;
        batches.push(b);
        spent += b;
    }
    Ok(batches)
}

/// Runs the circuit once to get its outcome distribution, then samples it
/// adaptively.
pub fn evaluate_point(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    noise: &NoiseSpec,
    cfg: &AdaptiveConfig,
    seed: u64,
    ledger: &mut ResourceLedger,
) -> Result<PointEvaluation> {
    let dist = sim.output_distribution(params, noise, None)?;
    evaluate_distribution(sim.instance(), &dist, params, cfg, seed, ledger)
}

/// Adaptive sampling of a known distribution.
///
/// Counts accumulate across rounds. The loop stops as soon as the dual gate
/// accepts or the cap is reached; in the latter case the statistics of the
/// full accumulation are returned with `accepted = false`.
pub fn evaluate_distribution(
    instance: &MaxCutInstance,
    dist: &OutcomeDistribution,
    params: &QaoaParams,
    cfg: &AdaptiveConfig,
    seed: u64,
    ledger: &mut ResourceLedger,
) -> Result<PointEvaluation> {
    cfg.validate()?;
    ledger.circuit_evaluations += 1;
    let mut cache = CutCache::new();
    let mut counts = Counts::new();
    let mut batches = Vec::new();
    let mut batch = cfg.pilot;
    loop {
        let round = batches.len() as u64;
        let new = sample(dist, batch, derive_seed(seed, &[stream::POINT, round]))?;
        counts.merge(&new);
        batches.push(batch);
        ledger.classical_count_ops += batch;

        let stats = evaluate_stats(
            instance,
            &counts,
            &mut cache,
            cfg.bootstrap,
            derive_seed(seed, &[stream::BOOTSTRAP, round]),
        )?;
        ledger.bootstrap_ops += (cfg.bootstrap * counts.distinct()) as u64;

        let accepted = dual_gate(
            stats.confidence,
            stats.var_normalized,
            cfg.tau_conf,
            cfg.tau_var,
        );
        let spent = counts.total();
        if accepted || spent >= cfg.cap {
            ledger.classical_cut_ops += cache.evaluations();
            ledger.record_point(spent, counts.distinct() as u64);
            return Ok(PointEvaluation {
                params: params.clone(),
                shots_used: spent,
                rounds: batches.len(),
                counts,
                stats,
                accepted,
                batches,
            });
        }
        batch = next_batch(batch, spent, cfg)?;
    }
}

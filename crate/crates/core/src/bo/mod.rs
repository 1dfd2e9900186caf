//! Sequential Bayesian optimization over the QAOA angles and the Stage-1
//! loop: propose a point, evaluate it adaptively, record it, and stop on
//! budget or stagnation.

mod tpe;

pub use tpe::{split_good_bad, suggest, Bounds, TpeConfig};

use serde::{Deserialize, Serialize};

use crate::error::{QaoaError, Result};
use crate::estimators::{evaluate_stats, Counts, CutCache, EvalStats, DEFAULT_BOOTSTRAP};
use crate::graph::{Bitstring, MaxCutInstance};
use crate::resources::ResourceLedger;
use crate::rng::{derive_seed, stream};
use crate::shots::{evaluate_point, AdaptiveConfig};
use crate::simulator::{sample, NoiseSpec, QaoaParams, QaoaSimulator};

/// One evaluated point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    /// 1-based trial index.
    pub t: usize,
    pub params: QaoaParams,
    /// Objective seen by the optimizer (mode cut or expectation estimate).
    pub y: f64,
    /// Mode of this trial's counts and its cut value.
    pub mode: Bitstring,
    pub mode_cut: f64,
    pub shots_used: u64,
    pub accepted: bool,
    pub confidence: Option<f64>,
    pub var_normalized: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagnationConfig {
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for StagnationConfig {
    fn default() -> Self {
        StagnationConfig {
            patience: 30,
            min_delta: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    Stagnation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MapBo,
    ExpBo,
    ExpGd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MapBo, Method::ExpBo, Method::ExpGd];

    pub fn name(&self) -> &'static str {
        match self {
            Method::MapBo => "map_bo",
            Method::ExpBo => "exp_bo",
            Method::ExpGd => "exp_gd",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = QaoaError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| QaoaError::InvalidConfig(format!("unknown method {s:?}")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by the BO-driven methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub depth: usize,
    pub t_max: usize,
    pub tpe: TpeConfig,
    /// `None` disables early stopping.
    pub stagnation: Option<StagnationConfig>,
    /// Shots of the final high-precision evaluation.
    pub n_final: u64,
    /// Bootstrap resamples used for the final evaluation's statistics.
    pub final_bootstrap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            depth: 2,
            t_max: 100,
            tpe: TpeConfig::default(),
            stagnation: Some(StagnationConfig::default()),
            n_final: 5000,
            final_bootstrap: DEFAULT_BOOTSTRAP,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 || self.t_max < 1 || self.n_final < 1 || self.final_bootstrap < 1 {
            return Err(QaoaError::InvalidConfig(
                "depth, t_max, n_final and final_bootstrap must be at least 1".into(),
            ));
        }
        if let Some(s) = self.stagnation {
            if s.patience < 1 || !(s.min_delta >= 0.0) {
                return Err(QaoaError::InvalidConfig(
                    "stagnation needs patience >= 1 and min_delta >= 0".into(),
                ));
            }
        }
        self.tpe.validate()
    }
}

/// Outcome of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: Method,
    pub trials: Vec<Trial>,
    pub best_params: QaoaParams,
    /// Mode of the incumbent trial.
    pub best_bitstring: Bitstring,
    pub best_objective: f64,
    pub final_eval: EvalStats,
    pub final_counts: Counts,
    pub ledger: ResourceLedger,
    pub stop_reason: StopReason,
}

impl RunResult {
    pub fn incumbent(&self) -> &Trial {
        incumbent(&self.trials).expect("runs contain at least one trial")
    }

    /// Per-trial records with the running incumbent objective.
    pub fn trial_records(&self) -> Vec<TrialRecord> {
        let mut best = f64::NEG_INFINITY;
        self.trials
            .iter()
            .map(|t| {
                best = best.max(t.y);
                TrialRecord {
                    t: t.t,
                    theta: t.params.theta(),
                    y: t.y,
                    shots: t.shots_used,
                    accepted: t.accepted,
                    conf: t.confidence,
                    var_norm: t.var_normalized,
                    incumbent: best,
                }
            })
            .collect()
    }
}

/// One line of the per-trial JSONL stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub t: usize,
    pub theta: Vec<f64>,
    pub y: f64,
    pub shots: u64,
    pub accepted: bool,
    pub conf: Option<f64>,
    pub var_norm: Option<f64>,
    pub incumbent: f64,
}

/// Highest-objective trial, earliest on ties.
pub fn incumbent(trials: &[Trial]) -> Option<&Trial> {
    trials
        .iter()
        .fold(None, |best: Option<&Trial>, t| match best {
            Some(b) if t.y <= b.y => Some(b),
            _ => Some(t),
        })
}

/// True iff at least `patience` trials exist and the incumbent objective
/// improved by less than `min_delta` over the last `patience` of them.
///
/// The improvement is measured from the incumbent as of the first trial in
/// the window to the current incumbent.
pub fn should_stop(history: &[Trial], cfg: &StagnationConfig) -> bool {
    if cfg.patience == 0 || history.len() < cfg.patience {
        return false;
    }
    let window_start = history.len() - cfg.patience;
    let before = history[..=window_start]
        .iter()
        .map(|t| t.y)
        .fold(f64::NEG_INFINITY, f64::max);
    let now = history
        .iter()
        .map(|t| t.y)
        .fold(f64::NEG_INFINITY, f64::max);
    now - before < cfg.min_delta
}

/// Samples `n_final` shots at `params` and computes the final statistics.
/// Charged to `final_eval_shots` only.
pub(crate) fn final_evaluation(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    noise: &NoiseSpec,
    cfg: &SearchConfig,
    seed: u64,
    ledger: &mut ResourceLedger,
) -> Result<(EvalStats, Counts)> {
    let dist = sim.output_distribution(params, noise, None)?;
    ledger.circuit_evaluations += 1;
    let counts = sample(&dist, cfg.n_final, derive_seed(seed, &[stream::FINAL]))?;
    ledger.final_eval_shots += cfg.n_final;
    let stats = evaluate_stats(
        sim.instance(),
        &counts,
        &mut CutCache::new(),
        cfg.final_bootstrap,
        derive_seed(seed, &[stream::FINAL, stream::BOOTSTRAP]),
    )?;
    Ok((stats, counts))
}

/// Generic BO loop; `evaluate` returns the trial for a proposed point.
pub(crate) fn bo_loop(
    method: Method,
    sim: &QaoaSimulator<'_>,
    cfg: &SearchConfig,
    noise: &NoiseSpec,
    seed: u64,
    ledger: &mut ResourceLedger,
    mut evaluate: impl FnMut(usize, &QaoaParams, &mut ResourceLedger) -> Result<Trial>,
) -> Result<RunResult> {
    cfg.validate()?;
    let bounds = Bounds::qaoa(cfg.depth);
    let mut trials: Vec<Trial> = Vec::with_capacity(cfg.t_max);
    let mut stop_reason = StopReason::Budget;
    for t in 1..=cfg.t_max {
        let params = suggest(
            &trials,
            &bounds,
            &cfg.tpe,
            derive_seed(seed, &[stream::SUGGEST, t as u64]),
        )?;
        trials.push(evaluate(t, &params, ledger)?);
        if t < cfg.t_max {
            if let Some(stag) = &cfg.stagnation {
                if should_stop(&trials, stag) {
                    stop_reason = StopReason::Stagnation;
                    break;
                }
            }
        }
    }
    finish(method, sim, cfg, noise, seed, trials, ledger, stop_reason)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    method: Method,
    sim: &QaoaSimulator<'_>,
    cfg: &SearchConfig,
    noise: &NoiseSpec,
    seed: u64,
    trials: Vec<Trial>,
    ledger: &mut ResourceLedger,
    stop_reason: StopReason,
) -> Result<RunResult> {
    let best = incumbent(&trials)
        .ok_or_else(|| QaoaError::InvalidConfig("no trials ran".into()))?
        .clone();
    let (final_eval, final_counts) = final_evaluation(sim, &best.params, noise, cfg, seed, ledger)?;
    Ok(RunResult {
        method,
        best_params: best.params,
        best_bitstring: best.mode,
        best_objective: best.y,
        final_eval,
        final_counts,
        ledger: ledger.clone(),
        stop_reason,
        trials,
    })
}

/// Stage 1 of the proposed method: TPE search on the mode objective with
/// adaptive per-point shots.
pub fn optimize_map_bo(
    instance: &MaxCutInstance,
    search: &SearchConfig,
    adaptive: &AdaptiveConfig,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<RunResult> {
    adaptive.validate()?;
    let sim = QaoaSimulator::new(instance)?;
    let mut ledger = ResourceLedger::new();
    bo_loop(
        Method::MapBo,
        &sim,
        search,
        noise,
        seed,
        &mut ledger,
        |t, params, ledger| {
            let point_seed = derive_seed(seed, &[stream::POINT, t as u64]);
            let eval = evaluate_point(&sim, params, noise, adaptive, point_seed, ledger)?;
            Ok(Trial {
                t,
                params: eval.params,
                y: eval.stats.mode_cut,
                mode: eval.stats.mode,
                mode_cut: eval.stats.mode_cut,
                shots_used: eval.shots_used,
                accepted: eval.accepted,
                confidence: Some(eval.stats.confidence),
                var_normalized: Some(eval.stats.var_normalized),
            })
        },
    )
}

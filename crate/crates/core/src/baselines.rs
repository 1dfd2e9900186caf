//! Fixed-shot expectation baselines: TPE search on the sampled expectation,
//! and Adam ascent with parameter-shift gradients.
//!
//! Both charge classical work per shot (one tally and one cut evaluation per
//! sampled bitstring), unlike the adaptive method which charges per distinct
//! key.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::adam::{Adam, AdamConfig};
use crate::bo::{bo_loop, finish, Bounds, Method, RunResult, SearchConfig, StopReason, Trial};
use crate::error::{QaoaError, Result};
use crate::estimators::{expectation_estimate, mode_of, Counts};
use crate::graph::MaxCutInstance;
use crate::resources::ResourceLedger;
use crate::rng::{derive_seed, rng_from, stream};
use crate::simulator::{sample, Coordinate, GateShift, NoiseSpec, QaoaParams, QaoaSimulator};

/// How an expectation value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// From the exact distribution; no shots charged.
    Exact,
    /// From this many sampled shots.
    Sampled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub iterations: usize,
    pub adam: AdamConfig,
    /// Shots per evaluation `N_fix`.
    pub shots_per_eval: u64,
    /// Use exact expectations for the base evaluations and gradients.
    pub exact_gradients: bool,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            iterations: 50,
            adam: AdamConfig::default(),
            shots_per_eval: 1000,
            exact_gradients: false,
        }
    }
}

impl GdConfig {
    fn mode(&self) -> EvalMode {
        if self.exact_gradients {
            EvalMode::Exact
        } else {
            EvalMode::Sampled(self.shots_per_eval)
        }
    }
}

/// Samples `shots` at the (optionally shifted) circuit and charges the
/// ledger under the per-shot model.
fn sampled_counts(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    shift: Option<GateShift>,
    shots: u64,
    noise: &NoiseSpec,
    seed: u64,
    ledger: &mut ResourceLedger,
) -> Result<Counts> {
    let dist = sim.output_distribution(params, noise, shift)?;
    let counts = sample(&dist, shots, seed)?;
    ledger.circuit_evaluations += 1;
    ledger.classical_count_ops += shots;
    ledger.classical_cut_ops += shots;
    ledger.record_point(shots, counts.distinct() as u64);
    Ok(counts)
}

/// Expectation estimate from `n_fix` shots.
pub fn fixed_shot_expectation_eval(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    n_fix: u64,
    noise: &NoiseSpec,
    seed: u64,
    ledger: &mut ResourceLedger,
) -> Result<f64> {
    let counts = sampled_counts(sim, params, None, n_fix, noise, seed, ledger)?;
    expectation_estimate(sim.instance(), &counts)
}

fn expectation_at(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    shift: Option<GateShift>,
    mode: EvalMode,
    noise: &NoiseSpec,
    seed: u64,
    ledger: &mut ResourceLedger,
) -> Result<f64> {
    match mode {
        EvalMode::Exact => {
            let dist = sim.output_distribution(params, noise, shift)?;
            ledger.circuit_evaluations += 1;
            Ok(sim.expectation(&dist))
        }
        EvalMode::Sampled(shots) => {
            let counts = sampled_counts(sim, params, shift, shots, noise, seed, ledger)?;
            expectation_estimate(sim.instance(), &counts)
        }
    }
}

/// Splits `total` shots as evenly as possible over `parts` evaluations.
fn split_shots(total: u64, parts: usize, index: usize) -> u64 {
    let parts = parts as u64;
    total / parts + u64::from((index as u64) < total % parts)
}

/// Parameter-shift gradient of the expectation with respect to
/// `theta = [betas, gammas]`.
///
/// Each layer angle drives several commuting gates. Its derivative is the sum
/// over those gates of `c_g (F(φ_g + π/2) - F(φ_g - π/2)) / 2`, where `φ_g`
/// is the gate angle and `c_g = dφ_g/dθ_k`. In sampled mode the `N_fix`
/// shots of each shifted side are split evenly across the gates, so one call
/// spends `2 d N_fix` shots.
pub fn parameter_shift_gradient(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    mode: EvalMode,
    noise: &NoiseSpec,
    seed: u64,
    ledger: &mut ResourceLedger,
) -> Result<Vec<f64>> {
    params.validate()?;
    let instance = sim.instance();
    let depth = params.depth();
    let mut grad = vec![0.0; params.dim()];
    for (k, slot) in grad.iter_mut().enumerate() {
        let coord = Coordinate::from_index(k, depth);
        let gates = coord.gate_count(instance);
        if gates == 0 {
            continue;
        }
        if let EvalMode::Sampled(n_fix) = mode {
            if n_fix < gates as u64 {
                return Err(QaoaError::InvalidConfig(format!(
                    "{n_fix} shots cannot be split over {gates} gates"
                )));
            }
        }
        for g in 0..gates {
            let gate_mode = match mode {
                EvalMode::Exact => EvalMode::Exact,
                EvalMode::Sampled(n_fix) => EvalMode::Sampled(split_shots(n_fix, gates, g)),
            };
            let mut side = |sign: f64, label: u64| {
                let shift = coord.shift(g, sign * FRAC_PI_2);
                let s = derive_seed(seed, &[k as u64, g as u64, label]);
                expectation_at(sim, params, Some(shift), gate_mode, noise, s, ledger)
            };
            let plus = side(1.0, 0)?;
            let minus = side(-1.0, 1)?;
            *slot += coord.chain_factor(instance, g) * 0.5 * (plus - minus);
        }
    }
    Ok(grad)
}

/// TPE search on the fixed-shot expectation.
pub fn optimize_exp_bo(
    instance: &MaxCutInstance,
    search: &SearchConfig,
    n_fix: u64,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<RunResult> {
    if n_fix < 1 {
        return Err(QaoaError::InvalidConfig("n_fix must be at least 1".into()));
    }
    let sim = QaoaSimulator::new(instance)?;
    let mut ledger = ResourceLedger::new();
    bo_loop(
        Method::ExpBo,
        &sim,
        search,
        noise,
        seed,
        &mut ledger,
        |t, params, ledger| {
            let s = derive_seed(seed, &[stream::POINT, t as u64]);
            let counts = sampled_counts(&sim, params, None, n_fix, noise, s, ledger)?;
            let mode = mode_of(&counts)?;
            Ok(Trial {
                t,
                params: params.clone(),
                y: expectation_estimate(instance, &counts)?,
                mode,
                mode_cut: instance.cut_value(&mode)?,
                shots_used: n_fix,
                accepted: true,
                confidence: None,
                var_normalized: None,
            })
        },
    )
}

/// Adam ascent on the expectation with parameter-shift gradients, starting
/// from a uniform random point in the search box.
pub fn optimize_exp_gd(
    instance: &MaxCutInstance,
    search: &SearchConfig,
    gd: &GdConfig,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<RunResult> {
    search.validate()?;
    if gd.iterations < 1 || gd.shots_per_eval < 1 {
        return Err(QaoaError::InvalidConfig(
            "iterations and shots_per_eval must be at least 1".into(),
        ));
    }
    let sim = QaoaSimulator::new(instance)?;
    let mut ledger = ResourceLedger::new();
    let mut theta = Bounds::qaoa(search.depth)
        .sample_uniform(&mut rng_from(derive_seed(seed, &[stream::INIT])));
    let mut adam = Adam::new(gd.adam, theta.len());
    let mut trials = Vec::with_capacity(gd.iterations);
    let mode = gd.mode();

    for t in 1..=gd.iterations {
        let params = QaoaParams::from_theta(&theta)?;
        let before = ledger.total_shots();
        let base_seed = derive_seed(seed, &[stream::BASE, t as u64]);
        let (y, mode_z) = match mode {
            EvalMode::Exact => {
                let dist = sim.output_distribution(&params, noise, None)?;
                ledger.circuit_evaluations += 1;
                let argmax = (0..dist.probs.len()).fold(0, |best, i| {
                    if dist.probs[i] > dist.probs[best] {
                        i
                    } else {
                        best
                    }
                });
                let z = crate::graph::Bitstring::new(argmax as u64, instance.n());
                (sim.expectation(&dist), z)
            }
            EvalMode::Sampled(n) => {
                let counts = sampled_counts(&sim, &params, None, n, noise, base_seed, &mut ledger)?;
                (expectation_estimate(instance, &counts)?, mode_of(&counts)?)
            }
        };
        let grad = parameter_shift_gradient(
            &sim,
            &params,
            mode,
            noise,
            derive_seed(seed, &[stream::GRADIENT, t as u64]),
            &mut ledger,
        )?;
        trials.push(Trial {
            t,
            params,
            y,
            mode: mode_z,
            mode_cut: instance.cut_value(&mode_z)?,
            shots_used: ledger.total_shots() - before,
            accepted: true,
            confidence: None,
            var_normalized: None,
        });
        adam.ascend(&mut theta, &grad);
    }
    finish(
        Method::ExpGd,
        &sim,
        search,
        noise,
        seed,
        trials,
        &mut ledger,
        StopReason::Budget,
    )
}

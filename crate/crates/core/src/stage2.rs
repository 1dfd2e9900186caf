//! Optional probability amplification of a target bitstring after Stage 1.
//!
//! Each step picks one coordinate of `theta` and one gate under it, estimates
//! the coordinate derivative of `p_θ(z_tar)` from a ±π/2 shift of that gate
//! alone, and takes one Adam step on that coordinate.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{Adam, AdamConfig};
use crate::error::{QaoaError, Result};
use crate::graph::Bitstring;
use crate::resources::ResourceLedger;
use crate::rng::{derive_seed, rng_from, stream};
use crate::simulator::{sample, Coordinate, GateShift, NoiseSpec, QaoaParams, QaoaSimulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifyConfig {
    /// Number of steps `L`.
    pub steps: usize,
    /// Shots per shifted circuit `N_amp`.
    pub shots_per_shift: u64,
    pub adam: AdamConfig,
    pub reeval_period: usize,
    /// Use exact probabilities instead of sampled frequencies.
    pub use_exact: bool,
}

impl Default for AmplifyConfig {
    fn default() -> Self {
        AmplifyConfig {
            steps: 150,
            shots_per_shift: 200,
            adam: AdamConfig::default(),
            reeval_period: 10,
            use_exact: false,
        }
    }
}

impl AmplifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots_per_shift < 1 || self.reeval_period < 1 {
            return Err(QaoaError::InvalidConfig(
                "shots_per_shift and reeval_period must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn mode(&self, seed: u64) -> ProbabilityMode {
        if self.use_exact {
            ProbabilityMode::Exact
        } else {
            ProbabilityMode::Sampled {
                shots: self.shots_per_shift,
                seed,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityMode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

/// `p_θ(z_tar)`, exact or as an empirical frequency. Sampled evaluations are
/// charged to `stage2_shots`.
pub fn target_probability(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    target: &Bitstring,
    noise: &NoiseSpec,
    mode: ProbabilityMode,
    ledger: &mut ResourceLedger,
) -> Result<f64> {
    shifted_probability(sim, params, None, target, noise, mode, ledger)
}

fn shifted_probability(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    shift: Option<GateShift>,
    target: &Bitstring,
    noise: &NoiseSpec,
    mode: ProbabilityMode,
    ledger: &mut ResourceLedger,
) -> Result<f64> {
    if target.len() != sim.instance().n() {
        return Err(QaoaError::LengthMismatch {
            expected: sim.instance().n(),
            got: target.len(),
        });
    }
    let dist = sim.output_distribution(params, noise, shift)?;
    ledger.circuit_evaluations += 1;
    match mode {
        ProbabilityMode::Exact => Ok(dist.prob(target)),
        ProbabilityMode::Sampled { shots, seed } => {
            let counts = sample(&dist, shots, seed)?;
            ledger.stage2_shots += shots;
            Ok(counts.get(target) as f64 / shots as f64)
        }
    }
}

/// Single-gate estimate of `∂p/∂θ_k` scaled by the number of gates under
/// coordinate `k`, so that its average over a uniformly chosen gate is the
/// full coordinate derivative.
#[allow(clippy::too_many_arguments)]
pub fn single_gate_estimate(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    target: &Bitstring,
    noise: &NoiseSpec,
    k: usize,
    gate: usize,
    mode_plus: ProbabilityMode,
    mode_minus: ProbabilityMode,
    ledger: &mut ResourceLedger,
) -> Result<f64> {
    let coord = Coordinate::from_index(k, params.depth());
    let gates = coord.gate_count(sim.instance());
    if k >= params.dim() || gate >= gates {
        return Err(QaoaError::InvalidParams(format!(
            "no gate {gate} under coordinate {k}"
        )));
    }
    let plus = shifted_probability(
        sim,
        params,
        Some(coord.shift(gate, FRAC_PI_2)),
        target,
        noise,
        mode_plus,
        ledger,
    )?;
    let minus = shifted_probability(
        sim,
        params,
        Some(coord.shift(gate, -FRAC_PI_2)),
        target,
        noise,
        mode_minus,
        ledger,
    )?;
    Ok(gates as f64 * coord.chain_factor(sim.instance(), gate) * 0.5 * (plus - minus))
}

/// Picks a coordinate and one of its gates uniformly and returns
/// `(k, estimate)`. Costs `2 N_amp` shots in sampled mode.
pub fn randomized_shift_gradient(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    target: &Bitstring,
    noise: &NoiseSpec,
    step_seed: u64,
    cfg: &AmplifyConfig,
    ledger: &mut ResourceLedger,
) -> Result<(usize, f64)> {
    let mut rng = rng_from(step_seed);
    let k = rng.gen_range(0..params.dim());
    let gates = Coordinate::from_index(k, params.depth()).gate_count(sim.instance());
    if gates == 0 {
        return Ok((k, 0.0));
    }
    let gate = rng.gen_range(0..gates);
    let est = single_gate_estimate(
        sim,
        params,
        target,
        noise,
        k,
        gate,
        cfg.mode(derive_seed(step_seed, &[1])),
        cfg.mode(derive_seed(step_seed, &[2])),
        ledger,
    )?;
    Ok((k, est))
}

/// Exact full gradient of `p_θ(z_tar)` by enumerating every gate shift.
pub fn full_shift_gradient(
    sim: &QaoaSimulator<'_>,
    params: &QaoaParams,
    target: &Bitstring,
    noise: &NoiseSpec,
) -> Result<Vec<f64>> {
    let mut scratch = ResourceLedger::new();
    (0..params.dim())
        .map(|k| {
            let gates = Coordinate::from_index(k, params.depth()).gate_count(sim.instance());
            let mut sum = 0.0;
            for g in 0..gates {
                sum += single_gate_estimate(
                    sim,
                    params,
                    target,
                    noise,
                    k,
                    g,
                    ProbabilityMode::Exact,
                    ProbabilityMode::Exact,
                    &mut scratch,
                )?;
            }
            Ok(sum / gates.max(1) as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplifyResult {
    pub params: QaoaParams,
    /// `p_θ(z_tar)` at the start and after every reevaluation.
    pub trace: Vec<f64>,
}

/// Runs `L` randomized single-coordinate Adam steps on `p_θ(z_tar)`.
///
/// The trace starts with the initial probability and gains one entry every
/// `reeval_period` steps and after the last step.
#[allow(clippy::too_many_arguments)]
pub fn amplify(
    sim: &QaoaSimulator<'_>,
    initial: &QaoaParams,
    target: &Bitstring,
    cfg: &AmplifyConfig,
    noise: &NoiseSpec,
    seed: u64,
    ledger: &mut ResourceLedger,
) -> Result<AmplifyResult> {
    cfg.validate()?;
    initial.validate()?;
    let mut theta = initial.theta();
    let mut adam = Adam::new(cfg.adam, theta.len());
    let reeval = |params: &QaoaParams, label: u64, ledger: &mut ResourceLedger| {
        target_probability(
            sim,
            params,
            target,
            noise,
            cfg.mode(derive_seed(seed, &[stream::REEVAL, label])),
            ledger,
        )
    };
    let mut trace = vec![reeval(initial, 0, ledger)?];
    for step in 1..=cfg.steps {
        let params = QaoaParams::from_theta(&theta)?;
        let step_seed = derive_seed(seed, &[stream::STAGE2, step as u64]);
        let (k, g) =
            randomized_shift_gradient(sim, &params, target, noise, step_seed, cfg, ledger)?;
        adam.ascend_coordinate(&mut theta, k, g);
        if step % cfg.reeval_period == 0 || step == cfg.steps {
            trace.push(reeval(
                &QaoaParams::from_theta(&theta)?,
                step as u64,
                ledger,
            )?);
        }
    }
    Ok(AmplifyResult {
        params: QaoaParams::from_theta(&theta)?,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bo::Bounds;
    use crate::graph::{random_regular, MaxCutInstance, WeightScheme};
    use crate::simulator::OutcomeDistribution;

    fn edge() -> MaxCutInstance {
        MaxCutInstance::new(2, [(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn probability_at_zero_is_uniform() {
        let g = random_regular(6, 3, 0).unwrap();
        let sim = QaoaSimulator::new(&g).unwrap();
        let z: Bitstring = "010110".parse().unwrap();
        let mut ledger = ResourceLedger::new();
        let p = target_probability(
            &sim,
            &QaoaParams::zeros(2),
            &z,
            &NoiseSpec::noiseless(),
            ProbabilityMode::Exact,
            &mut ledger,
        )
        .unwrap();
        assert!((p - 1.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_point_mass_frequency() {
        let z: Bitstring = "01".parse().unwrap();
        let c = sample(&OutcomeDistribution::point_mass(z), 50, 0).unwrap();
        assert_eq!(c.get(&z) as f64 / 50.0, 1.0);
    }

    #[test]
    fn sampled_matches_exact_within_binomial_error() {
        let g = random_regular(4, 3, 0).unwrap();
        let sim = QaoaSimulator::new(&g).unwrap();
        let params = QaoaParams::new(vec![0.8], vec![0.35]).unwrap();
        let z: Bitstring = "0101".parse().unwrap();
        let noise = NoiseSpec::noiseless();
        let mut ledger = ResourceLedger::new();
        let exact = target_probability(
            &sim,
            &params,
            &z,
            &noise,
            ProbabilityMode::Exact,
            &mut ledger,
        )
        .unwrap();
        let shots = 100_000;
        let est = target_probability(
            &sim,
            &params,
            &z,
            &noise,
            ProbabilityMode::Sampled { shots, seed: 3 },
            &mut ledger,
        )
        .unwrap();
        assert!((est - exact).abs() <= 4.0 * (exact * (1.0 - exact) / shots as f64).sqrt());
        assert_eq!(ledger.stage2_shots, shots);
    }

    /// Enumerating every gate choice recovers the exact derivative, checked
    /// against central finite differences.
    #[test]
    fn randomized_estimator_is_unbiased() {
        let g = random_regular(4, 3, 1)
            .unwrap()
            .assign_weights(WeightScheme::Uniform, 4);
        let sim = QaoaSimulator::new(&g).unwrap();
        let noise = NoiseSpec::noiseless();
        let theta = [0.45, 1.3];
        let params = QaoaParams::from_theta(&theta).unwrap();
        let z: Bitstring = "0110".parse().unwrap();
        let enumerated = full_shift_gradient(&sim, &params, &z, &noise).unwrap();
        let h = 1e-5;
        let mut scratch = ResourceLedger::new();
        for k in 0..2 {
            let mut up = theta;
            let mut down = theta;
            up[k] += h;
            down[k] -= h;
            let mut p = |t: &[f64]| {
                target_probability(
                    &sim,
                    &QaoaParams::from_theta(t).unwrap(),
                    &z,
                    &noise,
                    ProbabilityMode::Exact,
                    &mut scratch,
                )
                .unwrap()
            };
            let fd = (p(&up) - p(&down)) / (2.0 * h);
            assert!(
                (enumerated[k] - fd).abs() < 1e-6,
                "k={k}: {} vs {fd}",
                enumerated[k]
            );
        }
    }

    #[test]
    fn single_edge_estimates_are_bounded_and_seeded() {
        let g = edge();
        let sim = QaoaSimulator::new(&g).unwrap();
        let z: Bitstring = "01".parse().unwrap();
        let cfg = AmplifyConfig::default();
        let noise = NoiseSpec::noiseless();
        for seed in 0..20 {
            let mut ledger = ResourceLedger::new();
            let (k, est) = randomized_shift_gradient(
                &sim,
                &QaoaParams::zeros(1),
                &z,
                &noise,
                seed,
                &cfg,
                &mut ledger,
            )
            .unwrap();
            let gates = Coordinate::from_index(k, 1).gate_count(&g) as f64;
            let chain = if k == 0 { 2.0 } else { 1.0 };
            assert!(est.abs() <= gates * chain);
            assert_eq!(ledger.stage2_shots, 2 * cfg.shots_per_shift);
            let mut l2 = ResourceLedger::new();
            assert_eq!(
                randomized_shift_gradient(
                    &sim,
                    &QaoaParams::zeros(1),
                    &z,
                    &noise,
                    seed,
                    &cfg,
                    &mut l2
                )
                .unwrap(),
                (k, est)
            );
        }
    }

    #[test]
    fn zero_steps_returns_initial() {
        let g = edge();
        let sim = QaoaSimulator::new(&g).unwrap();
        let z: Bitstring = "01".parse().unwrap();
        let cfg = AmplifyConfig {
            steps: 0,
            use_exact: true,
            ..AmplifyConfig::default()
        };
        let theta0 = QaoaParams::new(vec![0.3], vec![0.2]).unwrap();
        let mut ledger = ResourceLedger::new();
        let out = amplify(
            &sim,
            &theta0,
            &z,
            &cfg,
            &NoiseSpec::noiseless(),
            0,
            &mut ledger,
        )
        .unwrap();
        assert_eq!(out.params, theta0);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn exact_amplification_raises_target_probability() {
        let g = edge();
        let sim = QaoaSimulator::new(&g).unwrap();
        let z: Bitstring = "01".parse().unwrap();
        let cfg = AmplifyConfig {
            steps: 200,
            use_exact: true,
            ..AmplifyConfig::default()
        };
        let bounds = Bounds::qaoa(1);
        let mut improved = 0;
        for seed in 0..10u64 {
            let theta0 =
                QaoaParams::from_theta(&bounds.sample_uniform(&mut rng_from(seed + 100))).unwrap();
            let mut ledger = ResourceLedger::new();
            let out = amplify(
                &sim,
                &theta0,
                &z,
                &cfg,
                &NoiseSpec::noiseless(),
                seed,
                &mut ledger,
            )
            .unwrap();
            assert!(out.trace.iter().all(|p| (0.0..=1.0).contains(p)));
            if out.trace.last().unwrap() >= &(out.trace[0] + 0.1) {
                improved += 1;
            }
        }
        assert!(improved >= 8, "{improved}/10 runs improved");
    }

    #[test]
    fn sampled_amplification_charges() {
        let g = random_regular(4, 3, 2).unwrap();
        let sim = QaoaSimulator::new(&g).unwrap();
        let z: Bitstring = "0110".parse().unwrap();
        let cfg = AmplifyConfig {
            steps: 25,
            ..AmplifyConfig::default()
        };
        let mut ledger = ResourceLedger::new();
        let theta0 = QaoaParams::new(vec![0.5], vec![0.3]).unwrap();
        let out = amplify(
            &sim,
            &theta0,
            &z,
            &cfg,
            &NoiseSpec::noiseless(),
            1,
            &mut ledger,
        )
        .unwrap();
        // 2 L N_amp for the steps, ceil(L / period) reevaluations, plus the initial one.
        let reevals = 25usize.div_ceil(10) as u64;
        assert_eq!(ledger.stage2_shots, 2 * 25 * 200 + (reevals + 1) * 200);
        assert_eq!(out.trace.len() as u64, reevals + 1);
        assert_eq!(ledger.optimization_shots, 0);
    }

    #[test]
    fn full_gradient_ascent_is_monotone() {
        let g = edge();
        let sim = QaoaSimulator::new(&g).unwrap();
        let z: Bitstring = "01".parse().unwrap();
        let noise = NoiseSpec::noiseless();
        let mut theta = vec![0.3, 0.4];
        let mut scratch = ResourceLedger::new();
        let prob = |t: &[f64], l: &mut ResourceLedger| {
            target_probability(
                &sim,
                &QaoaParams::from_theta(t).unwrap(),
                &z,
                &noise,
                ProbabilityMode::Exact,
                l,
            )
            .unwrap()
        };
        let mut trace = vec![prob(&theta, &mut scratch)];
        for _ in 0..100 {
            let grad =
                full_shift_gradient(&sim, &QaoaParams::from_theta(&theta).unwrap(), &z, &noise)
                    .unwrap();
            for (x, g) in theta.iter_mut().zip(&grad) {
                *x += 0.01 * g;
            }
            trace.push(prob(&theta, &mut scratch));
        }
        for w in trace.windows(10) {
            assert!(w[9] >= w[0] - 1e-12);
        }
        assert!(trace.last().unwrap() > &trace[0]);
    }
}

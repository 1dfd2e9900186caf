//! Quantum-shot and classical-operation accounting, accuracy metrics,
//! shots-to-threshold and saving ratios.
//!
//! Classical work is counted in abstract operations:
//!
//! * `classical_count_ops`: one per raw shot tallied into a histogram,
//! * `classical_cut_ops`: one per cut-value evaluation (per distinct key for
//!   the adaptive method, per shot for the fixed-shot baselines),
//! * `bootstrap_ops`: `B * K` per bootstrap confidence check.

use serde::{Deserialize, Serialize};

use crate::bo::{RunResult, Trial};
use crate::error::{QaoaError, Result};
use crate::estimators::{expectation_estimate, Counts, EvalStats};
use crate::graph::MaxCutInstance;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub optimization_shots: u64,
    pub final_eval_shots: u64,
    pub stage2_shots: u64,
    pub circuit_evaluations: u64,
    pub classical_count_ops: u64,
    pub classical_cut_ops: u64,
    pub bootstrap_ops: u64,
    /// `K_i` per optimization circuit execution.
    pub distinct_counts: Vec<u64>,
    /// `N_i` per optimization circuit execution.
    pub per_point_shots: Vec<u64>,
}

impl ResourceLedger {
    pub fn new() -> Self {
        ResourceLedger::default()
    }

    /// Records one optimization-phase measurement of `shots` shots that
    /// produced `distinct` distinct outcomes.
    pub fn record_point(&mut self, shots: u64, distinct: u64) {
        self.optimization_shots += shots;
        self.per_point_shots.push(shots);
        self.distinct_counts.push(distinct);
    }

    pub fn total_shots(&self) -> u64 {
        self.optimization_shots + self.final_eval_shots + self.stage2_shots
    }

    pub fn total_classical_ops(&self) -> u64 {
        self.classical_count_ops + self.classical_cut_ops + self.bootstrap_ops
    }

    /// Mean shots per recorded point, `N̄`.
    pub fn mean_point_shots(&self) -> Option<f64> {
        mean_u64(&self.per_point_shots)
    }

    /// Mean distinct outcomes per recorded point, `K̄`.
    pub fn mean_distinct(&self) -> Option<f64> {
        mean_u64(&self.distinct_counts)
    }

    /// Adds another ledger's charges. Associative and commutative in the
    /// scalar counters; the per-point sequences are concatenated.
    pub fn merge(&mut self, other: &ResourceLedger) {
        self.optimization_shots += other.optimization_shots;
        self.final_eval_shots += other.final_eval_shots;
        self.stage2_shots += other.stage2_shots;
        self.circuit_evaluations += other.circuit_evaluations;
        self.classical_count_ops += other.classical_count_ops;
        self.classical_cut_ops += other.classical_cut_ops;
        self.bootstrap_ops += other.bootstrap_ops;
        self.distinct_counts
            .extend_from_slice(&other.distinct_counts);
        self.per_point_shots
            .extend_from_slice(&other.per_point_shots);
    }
}

fn mean_u64(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<u64>() as f64 / values.len() as f64)
    }
}

/// Per-run quality and cost summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub final_mode_accuracy: f64,
    pub final_expectation_accuracy: f64,
    pub final_best_sample_accuracy: f64,
    pub total_shots: u64,
    pub optimization_shots: u64,
    pub final_eval_shots: u64,
    pub stage2_shots: u64,
    /// Optimization shots only; final evaluation excluded.
    pub shots_to_threshold: Option<u64>,
    #[serde(rename = "S_q")]
    pub s_q: Option<f64>,
    #[serde(rename = "S_cl")]
    pub s_cl: Option<f64>,
}

fn optimum_value(instance: &MaxCutInstance) -> Result<f64> {
    let (_, opt) = instance.brute_force_optimum()?;
    if opt <= 0.0 {
        return Err(QaoaError::ZeroOptimum);
    }
    Ok(opt)
}

/// `C(z_mode) / C(z*)` for the final evaluation.
pub fn final_mode_accuracy(instance: &MaxCutInstance, final_eval: &EvalStats) -> Result<f64> {
    Ok(instance.cut_value(&final_eval.mode)? / optimum_value(instance)?)
}

/// (expectation accuracy, best-sample accuracy) of the final counts.
pub fn aux_accuracies(instance: &MaxCutInstance, counts: &Counts) -> Result<(f64, f64)> {
    let opt = optimum_value(instance)?;
    let expectation = expectation_estimate(instance, counts)?;
    let mut best = 0.0f64;
    for (z, _) in counts.iter() {
        best = best.max(instance.cut_value(&z)?);
    }
    Ok((expectation / opt, best / opt))
}

/// Cumulative optimization shots at which the incumbent's mode accuracy
/// first reaches `threshold`.
///
/// The incumbent is the trial with the highest objective so far (earliest on
/// ties); its accuracy is its mode cut over the optimum.
pub fn shots_to_threshold(
    trials: &[Trial],
    instance: &MaxCutInstance,
    threshold: f64,
) -> Result<Option<u64>> {
    let opt = optimum_value(instance)?;
    let mut spent = 0u64;
    let mut incumbent: Option<&Trial> = None;
    for trial in trials {
        spent += trial.shots_used;
        if incumbent.is_none_or(|inc| trial.y > inc.y) {
            incumbent = Some(trial);
        }
        let inc = incumbent.expect("set above");
        if inc.mode_cut / opt >= threshold {
            return Ok(Some(spent));
        }
    }
    Ok(None)
}

/// Quantum and classical saving factors of the adaptive method relative to
/// the fixed-shot baseline:
///
/// `S_q = T_exp N_fix / (T_map N̄)` and
/// `S_cl = T_exp N_fix m / (T_map N̄ + T_map K̄ m + B T_map K̄)`,
/// with `N_fix`, `N̄` and `K̄` measured from the ledgers.
pub fn saving_ratios(
    ledger_exp: &ResourceLedger,
    t_exp: usize,
    ledger_map: &ResourceLedger,
    t_map: usize,
    edges: usize,
    bootstrap: usize,
) -> Result<(f64, f64)> {
    if t_exp == 0 || t_map == 0 {
        return Err(QaoaError::InvalidConfig(
            "trial counts must be positive".into(),
        ));
    }
    let (t_exp, t_map, m, b) = (t_exp as f64, t_map as f64, edges as f64, bootstrap as f64);
    let n_fix = ledger_exp.optimization_shots as f64 / t_exp;
    let n_adp = ledger_map.optimization_shots as f64 / t_map;
    let k_bar = ledger_map.distinct_counts.iter().sum::<u64>() as f64 / t_map;
    if n_adp == 0.0 {
        return Err(QaoaError::InvalidConfig(
            "adaptive ledger has no shots".into(),
        ));
    }
    let s_q = (t_exp * n_fix) / (t_map * n_adp);
    let s_cl = (t_exp * n_fix * m) / (t_map * n_adp + t_map * k_bar * m + b * t_map * k_bar);
    Ok((s_q, s_cl))
}

/// Quality and cost metrics for one run.
pub fn metrics(
    instance: &MaxCutInstance,
    run: &RunResult,
    threshold: f64,
) -> Result<MetricsReport> {
    let (exp_acc, best_acc) = aux_accuracies(instance, &run.final_counts)?;
    Ok(MetricsReport {
        final_mode_accuracy: final_mode_accuracy(instance, &run.final_eval)?,
        final_expectation_accuracy: exp_acc,
        final_best_sample_accuracy: best_acc,
        total_shots: run.ledger.total_shots(),
        optimization_shots: run.ledger.optimization_shots,
        final_eval_shots: run.ledger.final_eval_shots,
        stage2_shots: run.ledger.stage2_shots,
        shots_to_threshold: shots_to_threshold(&run.trials, instance, threshold)?,
        s_q: None,
        s_cl: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Bitstring;
    use crate::simulator::QaoaParams;

    fn stats_with_mode(z: &str) -> EvalStats {
        EvalStats {
            mode: z.parse().unwrap(),
            mode_cut: 0.0,
            confidence: 1.0,
            var_normalized: 0.0,
            expectation_estimate: 0.0,
            distinct: 1,
            shots: 1,
        }
    }

    fn trial(t: usize, mode_cut: f64, shots: u64) -> Trial {
        Trial {
            t,
            params: QaoaParams::zeros(1),
            y: mode_cut,
            mode: Bitstring::zeros(3),
            mode_cut,
            shots_used: shots,
            accepted: true,
            confidence: None,
            var_normalized: None,
        }
    }

    #[test]
    fn mode_accuracy_examples() {
        let k3 = MaxCutInstance::complete(3).unwrap();
        assert_eq!(
            final_mode_accuracy(&k3, &stats_with_mode("011")).unwrap(),
            1.0
        );
        assert_eq!(
            final_mode_accuracy(&k3, &stats_with_mode("000")).unwrap(),
            0.0
        );

        // Petersen graph, optimum 12; pick any string cutting 10 edges.
        let outer = (0..5).map(|i| (i, (i + 1) % 5, 1.0));
        let spokes = (0..5).map(|i| (i, i + 5, 1.0));
        let inner = (0..5).map(|i| (i + 5, (i + 2) % 5 + 5, 1.0));
        let petersen = MaxCutInstance::new(10, outer.chain(spokes).chain(inner)).unwrap();
        let z = (0u64..1024)
            .map(|i| Bitstring::new(i, 10))
            .find(|z| petersen.cut_value(z).unwrap() == 10.0)
            .unwrap();
        let acc = final_mode_accuracy(&petersen, &stats_with_mode(&z.to_string())).unwrap();
        assert!((acc - 10.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn aux_accuracy_examples() {
        let k3 = MaxCutInstance::complete(3).unwrap();
        let (z, _) = k3.brute_force_optimum().unwrap();
        let point = Counts::from_pairs([(z, 100)]).unwrap();
        assert_eq!(aux_accuracies(&k3, &point).unwrap(), (1.0, 1.0));

        let edge = MaxCutInstance::new(2, [(0, 1, 1.0)]).unwrap();
        let c =
            crate::simulator::sample(&crate::simulator::OutcomeDistribution::uniform(2), 4000, 1)
                .unwrap();
        let (e, b) = aux_accuracies(&edge, &c).unwrap();
        assert!((e - 0.5).abs() < 4.0 * (0.25f64 / 4000.0).sqrt());
        assert_eq!(b, 1.0);
    }

    #[test]
    fn zero_optimum_is_an_error() {
        let g = MaxCutInstance::new(2, [(0, 1, 0.0)]).unwrap();
        assert_eq!(
            final_mode_accuracy(&g, &stats_with_mode("01")),
            Err(QaoaError::ZeroOptimum)
        );
    }

    #[test]
    fn threshold_examples() {
        let k3 = MaxCutInstance::complete(3).unwrap(); // optimum 2
        let trace = [trial(1, 1.8, 100)];
        assert_eq!(shots_to_threshold(&trace, &k3, 0.8).unwrap(), Some(100));
        let trace = [trial(1, 1.0, 100), trial(2, 1.0, 200)];
        assert_eq!(shots_to_threshold(&trace, &k3, 0.8).unwrap(), None);
        // Accuracies 0.6, 0.7, 0.9 with cumulative shots 100, 300, 1200.
        let trace = [trial(1, 1.2, 100), trial(2, 1.4, 200), trial(3, 1.8, 900)];
        assert_eq!(shots_to_threshold(&trace, &k3, 0.8).unwrap(), Some(1200));
    }

    fn ledger(points: &[(u64, u64)]) -> ResourceLedger {
        let mut l = ResourceLedger::new();
        for &(n, k) in points {
            l.record_point(n, k);
        }
        l
    }

    #[test]
    fn saving_ratio_examples() {
        let exp = ledger(&vec![(1000, 600); 100]);
        let map = ledger(&vec![(250, 40); 100]);
        let (s_q, _) = saving_ratios(&exp, 100, &map, 100, 15, 200).unwrap();
        assert!((s_q - 4.0).abs() < 1e-12);

        let (s_q, _) = saving_ratios(&map, 100, &map, 100, 15, 200).unwrap();
        assert_eq!(s_q, 1.0);
    }

    #[test]
    fn classical_ratio_matches_direct_formula() {
        // N̄ = N_fix, K̄ = N̄, B = 0: S_cl = N m / (N + N m) = m / (1 + m).
        let exp = ledger(&[(1000, 1000); 10]);
        let map = ledger(&[(1000, 1000); 10]);
        let m = 15.0;
        let (_, s_cl) = saving_ratios(&exp, 10, &map, 10, 15, 0).unwrap();
        assert!((s_cl - m / (1.0 + m)).abs() < 1e-12);

        let exp = ledger(&vec![(1000, 700); 30]);
        let map = ledger(&[(100, 20), (300, 80), (1200, 500)]);
        let (s_q, s_cl) = saving_ratios(&exp, 30, &map, 3, 18, 200).unwrap();
        let direct_q = (30.0 * 1000.0) / 1600.0;
        let k_bar = 600.0 / 3.0;
        let direct_cl =
            (30.0 * 1000.0 * 18.0) / (1600.0 + 3.0 * k_bar * 18.0 + 200.0 * 3.0 * k_bar);
        assert!((s_q - direct_q).abs() < 1e-12);
        assert!((s_cl - direct_cl).abs() < 1e-12);
    }

    #[test]
    fn merge_is_order_independent_on_totals() {
        let a = ledger(&[(100, 3), (300, 9)]);
        let b = ledger(&[(1200, 40)]);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab.optimization_shots, ba.optimization_shots);
        assert_eq!(
            ab.optimization_shots,
            ab.per_point_shots.iter().sum::<u64>()
        );
        assert_eq!(ab.mean_point_shots(), ba.mean_point_shots());
    }
}

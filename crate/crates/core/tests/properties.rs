use modeqaoa_core::estimators::{mode_confidence, mode_of, Counts};
use modeqaoa_core::graph::{random_regular, Bitstring, WeightScheme};
use modeqaoa_core::resources::{saving_ratios, ResourceLedger};
use modeqaoa_core::shots::{next_batch, AdaptiveConfig};
use modeqaoa_core::simulator::{NoiseSpec, QaoaParams, QaoaSimulator};
use proptest::prelude::*;

fn ledger(points: Vec<(u64, u64)>, extra: u64) -> ResourceLedger {
    let mut l = ResourceLedger::new();
    for (n, k) in points {
        l.record_point(n, k.min(n));
    }
    l.final_eval_shots = extra;
    l.bootstrap_ops = extra * 3;
    l
}

fn arb_ledger() -> impl Strategy<Value = ResourceLedger> {
    (
        proptest::collection::vec((1u64..2000, 1u64..200), 0..20),
        0u64..10_000,
    )
        .prop_map(|(p, e)| ledger(p, e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ledger_merge_is_associative(a in arb_ledger(), b in arb_ledger(), c in arb_ledger()) {
        let mut left = a.clone();
        left.merge(&b);
        left.merge(&c);
        let mut bc = b.clone();
        bc.merge(&c);
        let mut right = a.clone();
        right.merge(&bc);
        prop_assert_eq!(left, right);
    }

    #[test]
    fn ledger_merge_totals_ignore_order(a in arb_ledger(), b in arb_ledger()) {
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        prop_assert_eq!(ab.total_shots(), ba.total_shots());
        prop_assert_eq!(ab.total_classical_ops(), ba.total_classical_ops());
        prop_assert_eq!(ab.mean_point_shots(), ba.mean_point_shots());
        prop_assert_eq!(ab.total_shots(), a.total_shots() + b.total_shots());
    }

    #[test]
    fn saving_ratio_matches_direct_formula(
        t_exp in 1usize..100,
        n_fix in 1u64..5000,
        map_points in proptest::collection::vec((100u64..1200, 1u64..100), 1..50),
        edges in 1usize..40,
    ) {
        let exp = ledger(vec![(n_fix, 1); t_exp], 0);
        let map = ledger(map_points.clone(), 0);
        let t_map = map_points.len();
        let (s_q, s_cl) = saving_ratios(&exp, t_exp, &map, t_map, edges, 200).unwrap();
        let n_bar = map.optimization_shots as f64 / t_map as f64;
        let direct = t_exp as f64 * n_fix as f64 / (t_map as f64 * n_bar);
        prop_assert!((s_q - direct).abs() <= 1e-12 * direct.max(1.0));
        prop_assert!(s_cl > 0.0);
    }

    #[test]
    fn batches_never_exceed_cap(pilot in 1u64..500, growth in 1.01f64..4.0, cap in 500u64..5000) {
        let cfg = AdaptiveConfig { pilot, growth, cap, ..AdaptiveConfig::default() };
        let mut spent = pilot;
        let mut batch = pilot;
        while spent < cap {
            batch = next_batch(batch, spent, &cfg).unwrap();
            prop_assert!(batch >= 1);
            spent += batch;
        }
        prop_assert_eq!(spent, cap);
    }

    #[test]
    fn confidence_is_a_probability(raw in proptest::collection::vec((0u64..16, 1u64..50), 1..10), seed in 0u64..1000) {
        let counts = Counts::from_pairs(raw.into_iter().map(|(i, k)| (Bitstring::new(i, 4), k))).unwrap();
        let c = mode_confidence(&counts, 50, seed).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c, mode_confidence(&counts, 50, seed).unwrap());
        let mode = mode_of(&counts).unwrap();
        prop_assert!(counts.iter().all(|(z, k)| k < counts.get(&mode) || (k == counts.get(&mode) && z >= mode)));
    }

    #[test]
    fn noisy_distributions_are_normalized(seed in 0u64..30, lambda in 0.0f64..0.05, theta in proptest::collection::vec(0.0f64..3.0, 4)) {
        let g = random_regular(6, 3, seed).unwrap().assign_weights(WeightScheme::Uniform, seed);
        let sim = QaoaSimulator::new(&g).unwrap();
        let noise = NoiseSpec::for_circuit(lambda, &g, 2).unwrap();
        let dist = sim.output_distribution(&QaoaParams::from_theta(&theta).unwrap(), &noise, None).unwrap();
        let total: f64 = dist.probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(dist.probs.iter().all(|p| *p >= 0.0));
        let e = sim.expectation(&dist);
        prop_assert!(e >= -1e-12 && e <= g.total_weight() + 1e-12);
    }
}

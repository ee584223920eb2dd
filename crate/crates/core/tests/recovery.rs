use ndarray::Array1;
use phase_manifold::algorithms::{
    f_plain, grad_f_plain, overlap, reshuffle, run_algorithm, spectral_init, success_test, AlgoConfig, Algorithm,
    ReshuffleConfig,
};
use phase_manifold::experiments::{generate_instance, run_sweep, SweepSpec, TransitionTable};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_algorithm_recovers_far_above_the_transition() {
    let cfg = AlgoConfig::default();
    let inst = generate_instance(30, 8.0, 4);
    for algo in Algorithm::ALL {
        let r = run_algorithm(&inst, algo, &cfg, 2).unwrap();
        assert!(r.success, "{}", algo.name());
        assert!(r.overlap.abs() > 1.0 - 1e-3);
    }
}

#[test]
fn solution_and_its_negation_both_pass() {
    let inst = generate_instance(20, 3.0, 9);
    assert!(success_test(&inst, inst.x_bar.view(), 1e-3));
    let neg = -&inst.x_bar;
    assert!(success_test(&inst, neg.view(), 1e-3));
    assert!((overlap(&inst, neg.view()) + 1.0).abs() < 1e-12);
}

#[test]
fn spectral_start_is_informative() {
    let inst = generate_instance(150, 4.0, 12);
    let x0 = spectral_init(&inst).unwrap();
    assert!(overlap(&inst, x0.view()).abs() > 0.5);
}

#[test]
fn small_sweep_is_reproducible_and_tabulated() {
    let spec = SweepSpec {
        n: 15,
        alpha_values: vec![2.0, 6.0],
        trials_per_alpha: 3,
        algorithms: vec![Algorithm::Gradplain, Algorithm::Hybrid],
        master_seed: 31,
        ..SweepSpec::desk()
    };
    let a = run_sweep(&spec).unwrap();
    let b = run_sweep(&spec).unwrap();
    assert_eq!(a.trials, b.trials);
    assert_eq!(a.table, TransitionTable::from_trials(&a.trials));
    assert_eq!(a.table.rows.len(), 4);
    for row in &a.table.rows {
        assert_eq!(row.trials, 3);
        assert!((0.0..=1.0).contains(&row.success_rate));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn objective_and_gradient_respect_global_sign(seed in 0u64..1000, scale in 0.1f64..2.0) {
        let inst = generate_instance(8, 2.5, seed);
        let x: Array1<f64> = inst.x_bar.iter().enumerate().map(|(i, v)| scale * v + 0.1 * (i as f64).sin()).collect();
        let neg = -&x;
        let f = f_plain(&inst, x.view()).unwrap();
        prop_assert!((f - f_plain(&inst, neg.view()).unwrap()).abs() <= 1e-9 * (1.0 + f));
        let g = grad_f_plain(&inst, x.view()).unwrap();
        let gn = grad_f_plain(&inst, neg.view()).unwrap();
        for (a, b) in g.iter().zip(gn.iter()) {
            prop_assert!((a + b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn reshuffle_never_increases_the_score(seed in 0u64..1000) {
        let inst = generate_instance(20, 3.0, seed);
        let x = spectral_init(&inst).unwrap();
        let scorer = |v: ndarray::ArrayView1<f64>| f_plain(&inst, v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = reshuffle(x.view(), &ReshuffleConfig::default(), scorer, &mut rng).unwrap();
        prop_assert!(scorer(y.view()) <= scorer(x.view()));
    }
}

mod support;

use interpqe::learner::{train_svr, SmoOptions, SvrHyperparams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::svr::{instance, predict, worst_gap};

#[test]
fn smo_matches_dense_reference() {
    let gap = worst_gap(1e-8);
    assert!(gap <= 1e-4, "largest prediction gap {gap}");
}

#[test]
fn default_tolerance_stays_close() {
    // The default stopping rule leaves a gap of the order of its tolerance.
    let gap = worst_gap(SmoOptions::default().tol);
    assert!(gap <= 1e-2, "largest prediction gap {gap}");
}

#[test]
fn constant_labels_give_constant_predictor() {
    let inst = instance(3);
    let y = vec![0.25; inst.x.len()];
    let sol = train_svr(&inst.x, &y, &inst.hp).unwrap();
    assert!(sol.coef.iter().all(|&c| c == 0.0));
    assert_eq!(sol.bias, 0.25);
}

#[test]
fn recovers_a_linear_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = |r: &[f64]| 0.5 + 0.3 * r[0] - 0.2 * r[1];
    let x: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let y: Vec<f64> = x.iter().map(|r| f(r)).collect();
    let hp = SvrHyperparams {
        c: 10.0,
        epsilon: 0.01,
        kernel_gamma: 0.1,
    };
    let sol = train_svr(&x, &y, &hp).unwrap();
    let test: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9)]).collect();
    let mse = test
        .iter()
        .map(|r| (predict(&x, &sol.coef, sol.bias, hp.kernel_gamma, r) - f(r)).powi(2))
        .sum::<f64>()
        / test.len() as f64;
    assert!(mse < 1e-3, "mse {mse}");
}

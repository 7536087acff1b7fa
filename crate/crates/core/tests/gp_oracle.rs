mod common;

use civmini::optimizer::gp::matern52_r;
use civmini::optimizer::{expected_improvement, fit_gp, gp_posterior, GpModel, Hyperparams};

use common::{ei_triples, matern, mc_expected_improvement, oracle_posterior, toy_data};

const QUERIES: [[f64; 3]; 4] = [[0.5, 0.5, 0.5], [0.1, 0.2, 0.9], [0.0, 1.0, 0.0], [0.8, 0.3, 0.4]];

#[test]
fn posterior_matches_dense_solve_with_fixed_hyperparameters() {
    let (xs, ys) = toy_data();
    for h in [
        Hyperparams { lengthscale: 0.7, signal_var: 1.3, noise_var: 0.05 },
        Hyperparams { lengthscale: 0.3, signal_var: 0.8, noise_var: 1e-3 },
        Hyperparams { lengthscale: 2.0, signal_var: 2.5, noise_var: 0.2 },
    ] {
        let model = GpModel::with_hyperparams(&xs, &ys, h).unwrap();
        assert_eq!(model.jitter(), 0.0);
        for q in QUERIES {
            let (mu, sd) = gp_posterior(&model, &q);
            let (omu, osd) = oracle_posterior(&xs, &ys, h.lengthscale, h.signal_var, h.noise_var, &q);
            assert!((mu - omu).abs() < 1e-8, "{h:?} {q:?}: mean {mu} vs {omu}");
            assert!((sd - osd).abs() < 1e-8, "{h:?} {q:?}: sd {sd} vs {osd}");
        }
    }
}

#[test]
fn fitted_posterior_matches_dense_solve() {
    let (xs, ys) = toy_data();
    let model = fit_gp(&xs, &ys).unwrap();
    let h = model.hyperparams();
    for q in QUERIES {
        let (mu, sd) = gp_posterior(&model, &q);
        let (omu, osd) = oracle_posterior(&xs, &ys, h.lengthscale, h.signal_var, h.noise_var + model.jitter(), &q);
        assert!((mu - omu).abs() < 1e-8);
        assert!((sd - osd).abs() < 1e-8);
    }
}

#[test]
fn expected_improvement_matches_monte_carlo() {
    for (i, (mu, sigma, best)) in ei_triples(20, 11).into_iter().enumerate() {
        let ei = expected_improvement(mu, sigma, best);
        let mc = mc_expected_improvement(mu, sigma, best, 1_000_000, i as u64);
        assert!((ei - mc).abs() < 1e-3, "({mu}, {sigma}, {best}): {ei} vs {mc}");
    }
}

#[test]
fn matern_at_unit_distance() {
    // (1 + sqrt5 + 5/3) exp(-sqrt5), evaluated independently.
    const PINNED: f64 = 0.523_994_108_831_820_3;
    assert!((matern52_r(1.0, 1.0) - PINNED).abs() < 1e-6);
    assert!((matern(&[0.0], &[1.0], 1.0, 1.0) - PINNED).abs() < 1e-12);
}

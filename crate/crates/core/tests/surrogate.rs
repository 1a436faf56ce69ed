mod oracles;

use bec_bo_core::surrogate::{GpGrouping, GpModel, Hyperparameters};
use bec_bo_core::ramp::ParamVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn interpolation_and_prior_reversion() {
    let e = oracles::trivial_gp_cases();
    assert!(e < 1e-6, "{e:e}");
}

#[test]
fn fits_a_sine() {
    let e = oracles::sin_fit_error();
    assert!(e < 1e-2, "{e:e}");
}

#[test]
fn row_order_does_not_matter() {
    let e = oracles::permutation_invariance_error();
    assert!(e < 1e-10, "{e:e}");
}

#[test]
fn one_factorization_per_group() {
    assert_eq!(oracles::factorization_counts(), [1, 3, 9, 1]);
}

/// With equal hyperparameters in every group, the three-group and nine-group
/// surrogates are the same model.
#[test]
fn groupings_agree_under_shared_hyperparameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let xs: Vec<Vec<f64>> = (0..30).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
    let cols: Vec<Vec<f64>> =
        (0..9).map(|k| xs.iter().map(|x| (3.0 * x[k % 5]).cos() * (k as f64 + 1.0) + x[0]).collect()).collect();
    let h = Hyperparameters { length_scales: vec![0.4, 0.7, 1.1, 0.5, 0.9], signal_variance: 1.3, noise_variance: 1e-6 };
    let fit = |g: GpGrouping| {
        let hs = vec![h.clone(); g.groups().len()];
        GpModel::fit_fixed(&xs, &cols, g, &hs).unwrap().0
    };
    let (three, nine, one) = (fit(GpGrouping::ThreeGps), fit(GpGrouping::NineScalar), fit(GpGrouping::OneGp));
    for _ in 0..20 {
        let p = ParamVector::from_unit(&(0..5).map(|_| rng.random()).collect::<Vec<f64>>());
        for ((a, b), c) in three.predict(&p).iter().zip(nine.predict(&p)).zip(one.predict(&p)) {
            for (u, v) in [(a.mean, b.mean), (a.variance, b.variance), (a.mean, c.mean), (a.variance, c.variance)] {
                assert!((u - v).abs() <= 1e-9 * u.abs().max(1e-12), "{u} vs {v}");
            }
        }
    }
}

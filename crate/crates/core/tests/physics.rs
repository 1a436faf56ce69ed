mod oracles;

#[test]
fn ground_state_is_stationary() {
    assert!(oracles::ground_state_drift() < 1e-9);
}

#[test]
fn com_oscillates_at_the_axial_frequency() {
    let (freq, drift) = oracles::com_oscillation();
    assert!(freq < 1e-3, "frequency error {freq:e}");
    assert!(drift < 1e-6, "energy drift {drift:e}");
}

#[test]
fn breathing_mode_of_isotropic_condensate() {
    let e = oracles::breathing_frequency_error();
    assert!(e < 1e-2, "breathing frequency error {e:e}");
}

#[test]
fn halving_the_step_changes_nothing() {
    let e = oracles::step_halving_error(oracles::HALVING_STEPS);
    assert!(e < 1e-8, "step-halving difference {e:e}");
}

#[test]
fn integrator_is_fourth_order() {
    let r = oracles::convergence_ratio();
    assert!((10.0..25.0).contains(&r), "halving ratio {r}");
}

use bec_bo_core::dynamics::{evaluate_transport, Transport, Weights};
use bec_bo_core::ramp::{build_spline, ParamVector, SplineSpec};
use proptest::prelude::*;

#[test]
fn size_perturbation_leaves_com_untouched() {
    let (trap, params) = (oracles::chip(), oracles::rb87());
    let spec = SplineSpec::new(4, 10, 5, 0.15).unwrap();
    let spline = build_spline(&ParamVector::new(vec![0.3; 15]).unwrap(), &spec).unwrap();
    let transport = Transport::new(&spline, &trap, &params);
    let start = transport.initial_state().unwrap();
    let mut shaken = start;
    shaken.lambda = [1.01, 0.99, 1.02];
    shaken.dlambda = [3.0, -1.0, 0.5];
    let track = |s| {
        let mut z = Vec::new();
        transport.run(s, 4000, |p| z.push((p.state.z.to_bits(), p.state.dz.to_bits()))).unwrap();
        z
    };
    assert_eq!(track(start), track(shaken));
}

#[test]
fn long_transports_are_adiabatic() {
    let (trap, params, w) = (oracles::chip(), oracles::rb87(), Weights::balanced());
    let p = ParamVector::new(vec![0.5; 15]).unwrap();
    let run = |t_f: f64, steps| {
        let spline = build_spline(&p, &SplineSpec::new(4, 10, 5, t_f).unwrap()).unwrap();
        evaluate_transport(&spline, &trap, &params, &w, steps).unwrap()
    };
    let fast = run(0.05, 4000);
    let slow = run(2.0, 160_000);
    assert!(slow.e_cl * 100.0 <= fast.e_cl, "{} vs {}", slow.e_cl, fast.e_cl);
    assert!(slow.e_qu_excess() * 100.0 <= fast.e_qu_excess(), "{} vs {}", slow.e_qu_excess(), fast.e_qu_excess());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn objective_never_beats_its_floor(x in proptest::collection::vec(0.0..1.0f64, 15), t_ms in 50.0..200.0f64) {
        let (trap, params, w) = (oracles::chip(), oracles::rb87(), Weights::balanced());
        let spline = build_spline(&ParamVector::from_unit(&x), &SplineSpec::new(4, 10, 5, t_ms * 1e-3).unwrap()).unwrap();
        let r = evaluate_transport(&spline, &trap, &params, &w, 4000).unwrap();
        prop_assert!(r.c_obj >= r.c_obj0 * (1.0 - 1e-9));
        prop_assert!(r.e_qu >= r.e_qu0 * (1.0 - 1e-9));
    }
}

use kolmo_dnn::calculus::relu_identity;
use kolmo_dnn::catalog;
use kolmo_dnn::constructor::{
    build_mc_network, build_sample_network, calibrate, select_realization, CalibrationBudget, McNetwork,
    RateConstants, Selection,
};
use kolmo_dnn::network::Matrix;
use kolmo_dnn::oracle::{lp_error, probe_points, FkConfig, ReferenceSolution, ScalarApproximant};
use kolmo_dnn::problem::KolmogorovProblem;
use kolmo_dnn::sde::{diffusion_factor, euler_path, EulerConfig, NoiseRealization};

fn frozen(name: &str) -> KolmogorovProblem {
    let mut p = catalog::problem(name, 1, 1.0).unwrap();
    p.a = Matrix::zeros(1, 1);
    p
}

#[test]
fn frozen_dynamics_realize_the_initial_value() {
    let p = frozen("heat-linear");
    let cfg = EulerConfig::new(0.5, 1.0).unwrap();
    let noise = NoiseRealization::generate(3, 0, &cfg, 1);
    let net = build_sample_network(&p, &cfg, &noise, &relu_identity(1)).unwrap();
    for x in [-2.0, -0.3, 0.0, 0.7, 5.0] {
        assert!((net.realize_scalar(&[x]).unwrap() - x).abs() < 1e-12);
    }
}

#[test]
fn linear_decay_in_two_steps_quarters_the_input() {
    let p = frozen("ou-linear");
    let cfg = EulerConfig::with_steps(1.0, 2).unwrap();
    assert_eq!(cfg.h, 0.5);
    let noise = NoiseRealization::generate(3, 0, &cfg, 1);
    let net = build_sample_network(&p, &cfg, &noise, &relu_identity(1)).unwrap();
    for x in [-2.0, -0.3, 0.0, 0.7, 5.0] {
        assert!((net.realize_scalar(&[x]).unwrap() - 0.25 * x).abs() < 1e-12);
    }
}

#[test]
fn sample_network_matches_the_euler_pipeline() {
    let p = catalog::problem("bounded-drift", 2, 1.0).unwrap();
    let cfg = EulerConfig::new(0.5, 1.0).unwrap();
    let noise = NoiseRealization::generate(11, 5, &cfg, 2);
    let net = build_sample_network(&p, &cfg, &noise, &relu_identity(2)).unwrap();
    let (drift, f0) = (p.drift_net.as_ref().unwrap(), p.f0_net.as_ref().unwrap());
    let diff = diffusion_factor(&p.a).unwrap();
    for x in probe_points(&p.measure, 20, 9) {
        let y = euler_path(drift, &x, &diff, &cfg, &noise, false).unwrap().endpoint;
        let want = f0.realize_scalar(&y).unwrap();
        assert!((net.realize_scalar(&x).unwrap() - want).abs() <= 1e-8);
    }
}

#[test]
fn single_sample_average_is_the_sample() {
    let p = catalog::problem("heat-max", 2, 1.0).unwrap();
    let cfg = EulerConfig::new(1.0, 1.0).unwrap();
    let id = relu_identity(2);
    let mc = build_mc_network(&p, &cfg, 1, 4, &id).unwrap();
    let single = mc.sample_network(0).unwrap();
    let dense = mc.materialize().unwrap();
    for x in probe_points(&p.measure, 20, 1) {
        let s = single.realize_scalar(&x).unwrap();
        assert!((mc.eval(&x).unwrap() - s).abs() < 1e-12);
        assert!((dense.realize_scalar(&x).unwrap() - s).abs() < 1e-12);
    }
}

#[test]
fn mirrored_noise_cancels_exactly() {
    let p = catalog::problem("heat-linear", 2, 1.0).unwrap();
    let cfg = EulerConfig::new(0.5, 1.0).unwrap();
    let id = relu_identity(2);
    let noise = NoiseRealization::generate(5, 0, &cfg, 2);
    let nets = [
        build_sample_network(&p, &cfg, &noise, &id).unwrap(),
        build_sample_network(&p, &cfg, &noise.mirrored(), &id).unwrap(),
    ];
    let mc = McNetwork::from_samples(&nets).unwrap();
    let dense = mc.materialize().unwrap();
    for x in probe_points(&p.measure, 20, 2) {
        let f0: f64 = x.iter().sum();
        assert!((mc.eval(&x).unwrap() - f0).abs() < 1e-12);
        assert!((dense.realize_scalar(&x).unwrap() - f0).abs() < 1e-12);
    }
}

#[test]
fn average_matches_mean_of_samples_and_round_trips() {
    let p = catalog::problem("ou-linear", 2, 1.0).unwrap();
    let cfg = EulerConfig::new(0.5, 1.0).unwrap();
    let mc = build_mc_network(&p, &cfg, 6, 8, &relu_identity(2)).unwrap();
    let back = McNetwork::from_json(&mc.to_json().unwrap()).unwrap();
    assert_eq!(back, mc);
    let dense = mc.materialize().unwrap();
    assert!(dense.param_count() <= 36 * mc.sample_architecture().param_count());
    for x in probe_points(&p.measure, 20, 3) {
        let mean = (0..6).map(|m| mc.sample_network(m).unwrap().realize_scalar(&x).unwrap()).sum::<f64>() / 6.0;
        assert!((mc.eval(&x).unwrap() - mean).abs() <= 1e-8);
        assert!((dense.realize_scalar(&x).unwrap() - mean).abs() <= 1e-8);
    }
}

#[test]
fn more_samples_reduce_the_error() {
    let p = catalog::problem("heat-max", 2, 1.0).unwrap();
    let reference = ReferenceSolution::for_problem(&p, FkConfig::new(4096, 0));
    let cfg = EulerConfig::new(1.0, 1.0).unwrap();
    let id = relu_identity(2);
    let err = |m: usize| {
        let net = build_mc_network(&p, &cfg, m, 21, &id).unwrap();
        lp_error(&reference, &net, &p.measure, 2.0, 512, 77).unwrap().estimate
    };
    let (e4, e64) = (err(4), err(64));
    assert!(e64 < e4, "M=64 error {e64} not below M=4 error {e4}");
}

#[test]
fn selection_returns_the_best_candidate() {
    let p = catalog::problem("heat-max", 2, 1.0).unwrap();
    let reference = ReferenceSolution::for_problem(&p, FkConfig::new(4096, 0));
    let constants = RateConstants::calibrated(16, 1.0);
    let one = select_realization(&p, &reference, &constants, Selection { candidates: 1, probes: 256, p: 2.0 }, 1)
        .unwrap();
    assert_eq!(one.selected, 0);
    assert_eq!(one.candidate_errors.len(), 1);

    let eight = select_realization(&p, &reference, &constants, Selection { candidates: 8, probes: 256, p: 2.0 }, 1)
        .unwrap();
    let mut errs: Vec<f64> = eight.candidate_errors.iter().map(|e| e.estimate).collect();
    let chosen = eight.selected_error().estimate;
    assert!(errs.iter().all(|&e| chosen <= e));
    errs.sort_by(f64::total_cmp);
    assert!(chosen <= 0.5 * (errs[3] + errs[4]));
    assert_eq!(eight.network.samples(), 16);
}

#[test]
fn exact_problem_calibrates_with_few_samples() {
    let p = catalog::problem("heat-linear", 1, 1.0).unwrap();
    let cal = calibrate(&p, 1.0, 2.0, 0, &CalibrationBudget::default()).unwrap();
    assert!(cal.constants.m <= 16, "M = {}", cal.constants.m);
}

#[test]
fn sample_count_is_monotone_in_epsilon() {
    let p = catalog::problem("heat-linear", 2, 1.0).unwrap();
    let ms: Vec<u64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&eps| calibrate(&p, eps, 2.0, 0, &CalibrationBudget::default()).unwrap().constants.m)
        .collect();
    assert!(ms.windows(2).all(|w| w[0] <= w[1]), "{ms:?}");
}

#[test]
fn calibrated_quadratic_network_meets_epsilon_on_fresh_probes() {
    let eps = 0.5;
    let p = catalog::problem("heat-quadratic", 2, 1.0).unwrap();
    let cal = calibrate(&p, eps, 2.0, 3, &CalibrationBudget::default()).unwrap();
    let reference = ReferenceSolution::for_problem(&p, FkConfig::new(4096, 0));
    let report =
        select_realization(&p, &reference, &cal.constants, Selection { candidates: 4, probes: 512, p: 2.0 }, 3)
            .unwrap();
    let fresh = lp_error(&reference, &report.network, &p.measure, 2.0, 2048, 999).unwrap();
    assert!(fresh.estimate <= eps, "fresh error {} > {eps}", fresh.estimate);
}

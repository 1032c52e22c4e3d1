use std::sync::Arc;

use proptest::prelude::*;
use ridgelearn::l1::SolveSettings;
use ridgelearn::labels;
use ridgelearn::linalg::norm2;
use ridgelearn::oracle::{make_cap_counterexample, Ridge1, Scalar, Separable};
use ridgelearn::recovery::{
    algorithm1, algorithm2, build_sketch, identify_active_coordinates, k_from_sketch,
    sign_aligned_error, subspace_error, surrogate_evaluate, RidgeEstimate,
};
use ridgelearn::sampling::{derive_stream, sample_ball};
use ridgelearn::{projection_distance, svd, DenseMatrix, Domain, Error, NoiseSpec, RidgeOracle, SamplingPlan};

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

fn ridge1(a: Vec<f64>, g: Scalar) -> RidgeOracle {
    let d = a.len();
    let a = DenseMatrix::new(1, d, a).unwrap();
    RidgeOracle::new(a, Arc::new(Ridge1(Arc::new(g))), 1.0, 0.5, Domain::Ball).unwrap()
}

fn settings() -> SolveSettings {
    SolveSettings::default()
}

#[test]
fn linear_ridge_is_recovered() {
    let mut o = ridge1(unit(100, 0), Scalar::identity());
    let plan = SamplingPlan::new(5, 40, 0.01, 3);
    let r = algorithm1(&mut o, &plan, &settings()).unwrap();
    assert!(sign_aligned_error(&r.a_hat, &unit(100, 0)).unwrap() <= 1e-3);
    assert!((norm2(&r.a_hat) - 1.0).abs() <= 1e-12);
    assert_eq!(r.queries_used, 5 * 41);
    assert_eq!(o.query_count(), 5 * 41);

    // the subspace algorithm agrees with k = 1
    let r2 = algorithm2(&mut o, 1, &plan, &settings()).unwrap();
    let a1 = DenseMatrix::new(100, 1, r.a_hat.clone()).unwrap();
    assert!(projection_distance(&r2.a_hat.transpose(), &a1).unwrap() <= 1e-6);
}

#[test]
fn linear_sketch_matches_exact_gradients() {
    let mut o = ridge1(unit(30, 6), Scalar::identity());
    let plan = SamplingPlan::new(4, 15, 0.05, 9);
    let sketch = build_sketch(&mut o, &plan, &settings()).unwrap();
    let x = sketch.true_gradients(&o);
    let phi_x = sketch.phi.matmul(&x).unwrap();
    let diff = phi_x.sub(&sketch.y).unwrap();
    assert!(diff.frobenius_norm() <= 1e-12 * sketch.y.frobenius_norm().max(1.0));
    assert_eq!(identify_active_coordinates(&sketch, 1).unwrap(), vec![6]);
}

#[test]
fn taylor_remainder_bound_for_quadratic() {
    // g(y) = y²/2 and a = e1: every entry of Y − ΦX is at most ε C1² C2 / (2 m_Φ)
    let mut o = ridge1(unit(50, 0), Scalar::Poly(vec![0.0, 0.0, 0.5]));
    let plan = SamplingPlan::new(6, 25, 0.1, 4);
    let sketch = build_sketch(&mut o, &plan, &settings()).unwrap();
    let e = sketch.y.sub(&sketch.phi.matmul(&sketch.true_gradients(&o)).unwrap()).unwrap();
    let bound = plan.epsilon / (2.0 * plan.m_phi as f64);
    for v in e.as_slice() {
        assert!(v.abs() <= bound * (1.0 + 1e-9), "{v} > {bound}");
    }
}

#[test]
fn constant_function_is_degenerate() {
    let mut o = ridge1(unit(20, 0), Scalar::Poly(vec![3.0]));
    let plan = SamplingPlan::new(4, 10, 0.05, 1);
    let sketch = build_sketch(&mut o, &plan, &settings()).unwrap();
    assert!(sketch.y.as_slice().iter().all(|v| *v == 0.0));
    assert!(sketch.x_hat.as_slice().iter().all(|v| *v == 0.0));
    assert!(matches!(algorithm1(&mut o, &plan, &settings()), Err(Error::DegenerateSignal(_))));
    assert!(matches!(identify_active_coordinates(&sketch, 1), Err(Error::DegenerateSignal(_))));
}

#[test]
fn cap_counterexample_is_missed_by_random_points() {
    let mut a = vec![0.0; 1000];
    a[0] = 0.6;
    a[1] = 0.8;
    let mut o = make_cap_counterexample(&a, 0.5).unwrap();
    let plan = SamplingPlan::new(20, 100, 0.1, 5);
    assert!(matches!(algorithm1(&mut o, &plan, &settings()), Err(Error::DegenerateSignal(_))));
    assert_eq!(o.query_count(), 20 * 101);
}

#[test]
fn sum_of_linear_coordinates_is_a_single_ridge() {
    // y₁ + y₂ has the constant gradient e1 + e2, so only one direction is identifiable
    let d = 40;
    let a = DenseMatrix::from_rows(&[unit(d, 0), unit(d, 1)]).unwrap();
    let g = Separable(vec![Arc::new(Scalar::identity()), Arc::new(Scalar::identity())]);
    let mut o = RidgeOracle::new(a, Arc::new(g), 1.0, 0.5, Domain::Ball).unwrap();
    let plan = SamplingPlan::new(6, 20, 0.01, 8);
    assert!(matches!(algorithm2(&mut o, 2, &plan, &settings()), Err(Error::DegenerateSignal(_))));
    let r = algorithm1(&mut o, &plan, &settings()).unwrap();
    let mut diag = vec![0.0; d];
    diag[0] = 0.5f64.sqrt();
    diag[1] = 0.5f64.sqrt();
    assert!(sign_aligned_error(&r.a_hat, &diag).unwrap() <= 1e-9);
}

#[test]
fn two_dimensional_ridge() {
    let d = 40;
    let a = DenseMatrix::from_rows(&[unit(d, 0), unit(d, 1)]).unwrap();
    let g = Separable(vec![Arc::new(Scalar::identity()), Arc::new(Scalar::Poly(vec![0.0, 0.0, 0.5]))]);
    let mut o = RidgeOracle::new(a.clone(), Arc::new(g), 1.0, 0.5, Domain::Ball).unwrap();
    let plan = SamplingPlan::new(6, 20, 0.001, 8);
    let r = algorithm2(&mut o, 2, &plan, &settings()).unwrap();
    assert!(projection_distance(&r.a_hat.transpose(), &a.transpose()).unwrap() <= 1e-3);
    assert!(r.a_hat.row_orthonormality_defect() <= 1e-10);
    assert!(r.sigma.windows(2).all(|w| w[0] >= w[1]));
    let small = SamplingPlan::new(1, 20, 0.01, 8);
    let before = o.query_count();
    assert!(matches!(algorithm2(&mut o, 2, &small, &settings()), Err(Error::InvalidArgument(_))));
    assert_eq!(o.query_count(), before);
}

#[test]
fn pure_noise_sketch_does_not_panic() {
    let mut o = ridge1(unit(60, 0), Scalar::Poly(vec![0.0]))
        .with_noise(NoiseSpec::gaussian(0.01), derive_stream(1, &labels!["n"]));
    let plan = SamplingPlan::new(5, 20, 0.1, 2);
    match build_sketch(&mut o, &plan, &settings()) {
        Ok(sketch) => match identify_active_coordinates(&sketch, 1) {
            Ok(set) => assert_eq!(set.len(), 1),
            Err(e) => assert!(matches!(e, Error::DegenerateSignal(_))),
        },
        Err(e) => assert!(matches!(e, Error::SketchFailure(_))),
    }
}

#[test]
fn surrogate_is_invariant_under_sign_and_rotation() {
    let d = 30;
    let mut s = derive_stream(4, &labels!["inv"]);
    let rows = sample_ball(d, 2, &mut s);
    let ah = svd(&rows.transpose()).unwrap().u.transpose();
    let theta: f64 = 0.7;
    let rot = DenseMatrix::new(2, 2, vec![theta.cos(), theta.sin(), -theta.sin(), theta.cos()]).unwrap();
    let rotated = rot.matmul(&ah).unwrap();
    let neg = ah.scale(-1.0);
    let g = Separable(vec![Arc::new(Scalar::Sin), Arc::new(Scalar::Poly(vec![0.0, 0.0, 1.0]))]);
    let a = DenseMatrix::from_rows(&[unit(d, 0), unit(d, 1)]).unwrap();
    let mut o = RidgeOracle::new(a, Arc::new(g), 1.0, 0.5, Domain::Ball).unwrap();
    let probes = sample_ball(d, 20, &mut s);
    for p in 0..20 {
        let x = probes.row(p);
        let base = surrogate_evaluate(&ah, &mut o, x).unwrap();
        assert!((surrogate_evaluate(&rotated, &mut o, x).unwrap() - base).abs() <= 1e-12);
        assert!((surrogate_evaluate(&neg, &mut o, x).unwrap() - base).abs() <= 1e-12);
    }
    assert_eq!(o.query_count(), 60);
}

/// Sparse-row two-dimensional instance with `g(y) = sin y₁ + y₂²`.
fn sin_square(d: usize, seed: u64) -> RidgeOracle {
    let mut s = derive_stream(seed, &labels!["rows"]);
    let a = ridgelearn::oracle::sparse_row_orthonormal(2, d, 4, &mut s).unwrap();
    let g = Separable(vec![Arc::new(Scalar::Sin), Arc::new(Scalar::Poly(vec![0.0, 0.0, 1.0]))]);
    RidgeOracle::new(a, Arc::new(g), 1.0, 0.5, Domain::Ball).unwrap()
}

#[test]
fn wedin_and_pointwise_chains_on_sketches() {
    let d = 120;
    for trial in 0..5u64 {
        let mut o = sin_square(d, trial);
        let plan = SamplingPlan::new(12, 60, 0.1, 100 + trial);
        let sketch = build_sketch(&mut o, &plan, &settings()).unwrap();
        let r = k_from_sketch(&sketch, 2).unwrap();
        let a = o.ridge_matrix().clone();
        let err = subspace_error(&r.a_hat, &a).unwrap();
        let e = sketch.true_gradients(&o).sub(&sketch.x_hat).unwrap().frobenius_norm();
        if r.sigma[1] > e {
            assert!(err <= 2.0 * e / r.sigma[1] + 1e-12, "trial {trial}: {err} vs {}", 2.0 * e / r.sigma[1]);
        }
        let c2 = o.spec().c2;
        let mut s = derive_stream(trial, &labels!["probe"]);
        let probes = sample_ball(d, 200, &mut s);
        for p in 0..200 {
            let x = probes.row(p);
            let gap = (o.true_value(x) - o.true_value(&r.project(x))).abs();
            let bound = c2 * 2f64.sqrt() * (1.0 + o.spec().bar_eps) * err * norm2(x);
            assert!(gap <= bound + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn query_budget_is_exact(m_x in 1usize..6, m_phi in 1usize..30, seed in any::<u64>(), noisy in any::<bool>()) {
        let mut o = ridge1(unit(40, 3), Scalar::Poly(vec![0.0, 1.0, 0.0, 1.0]));
        if noisy {
            o = o.with_noise(NoiseSpec::gaussian(1e-3), derive_stream(seed, &labels!["q"]));
        }
        let plan = SamplingPlan::new(m_x, m_phi, 0.01, seed);
        match algorithm1(&mut o, &plan, &settings()) {
            Ok(r) => prop_assert_eq!(r.queries_used, plan.query_budget()),
            Err(e) => prop_assert!(matches!(e, Error::DegenerateSignal(_) | Error::SketchFailure(_))),
        }
        prop_assert_eq!(o.query_count(), (m_x * (m_phi + 1)) as u64);
    }

    #[test]
    fn pointwise_chain_k1(seed in any::<u64>()) {
        let d = 80;
        let mut a = vec![0.0; d];
        a[1] = 0.6;
        a[7] = -0.8;
        let mut o = ridge1(a.clone(), Scalar::Poly(vec![0.0, 1.0, 0.0, 1.0]));
        let plan = SamplingPlan::new(4, 20, 0.1, seed);
        let r = algorithm1(&mut o, &plan, &settings()).unwrap();
        let err = sign_aligned_error(&r.a_hat, &a).unwrap();
        let c2 = o.spec().c2;
        let mut s = derive_stream(seed, &labels!["probes"]);
        let probes = sample_ball(d, 50, &mut s);
        for p in 0..50 {
            let x = probes.row(p);
            let gap = (o.true_value(x) - o.true_value(&r.project(x))).abs();
            prop_assert!(gap <= c2 * (1.0 + o.spec().bar_eps) * err * norm2(x) + 1e-12);
        }
    }
}

//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset.

use std::io::Write;
use std::time::{Duration, Instant};

use ridgelearn::analysis::{
    alpha_k1, decay_exponent, moment, pushforward_expectation, verify_hoeffding_max,
    verify_matrix_chernoff, DeterministicSampler, GradientSampler, QuadratureSpec, RankOneSampler,
    TailCheck,
};
use ridgelearn::experiments::{heatmap_bytes, median, run_phase_diagram, ExperimentConfig};
use ridgelearn::l1::{basis_pursuit, verify_noisy_bound, NoisyInstance, SolveSettings};
use ridgelearn::labels;
use ridgelearn::linalg::norm2;
use ridgelearn::oracle::{make_class_instance, FunctionClass, ModelOptions, ModelTemplate};
use ridgelearn::recovery::{
    algorithm1, build_sketch, k_from_sketch, sign_aligned_error, subspace_error,
    taylor_column_bound, RidgeEstimate,
};
use ridgelearn::sampling::{bernoulli_directions, derive_seed, derive_stream, sample_ball, Stream};
use ridgelearn::{projection_distance, svd, DenseMatrix, SamplingPlan};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 20120901;

// criterion 1
const MOMENT_REL_TOL: f64 = 1e-8;
const MOMENT_BUDGET: Duration = Duration::from_secs(5);
// criterion 2
const SLOPE_TOL: f64 = 0.15;
const DECAY_BUDGET: Duration = Duration::from_secs(10);
// criterion 3
const L1_EXACT_TOL: f64 = 1e-5;
const L1_MIN_SUCCESSES: usize = 98;
const L1_NOISE_NORM: f64 = 0.01;
const L1_MAX_CONSTANT: f64 = 10.0;
const L1_BUDGET: Duration = Duration::from_secs(120);
// criterion 4
const WEDIN_INSTANCES: usize = 1000;
const WEDIN_BUDGET: Duration = Duration::from_secs(30);
// criterion 5
const MC_TRIALS: usize = 10_000;
const MC_BUDGET: Duration = Duration::from_secs(60);
// criterion 6
const K1_TRIALS: usize = 30;
const K1_PROBES: usize = 1000;
const K1_MAX_INVERSIONS: usize = 1;
const K1_BUDGET: Duration = Duration::from_secs(600);
// criterion 7
const K2_TRIALS: usize = 50;
const K2_PROBES: usize = 1000;
const K2_BUDGET: Duration = Duration::from_secs(600);
// criterion 8
const FIG2_MIN_RATE: f64 = 0.9;
const FIG2_SLACK: f64 = 0.05;
const FIG2_BUDGET: Duration = Duration::from_secs(7200);
const SMOKE_BUDGET: Duration = Duration::from_secs(300);
// slack for round-off in chain inequalities
const CHAIN_ABS: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Query accounting observed by criteria 6–8, checked by criterion 9.
#[derive(Default)]
struct Accounting {
    runs: usize,
    mismatches: usize,
}

impl Accounting {
    fn record(&mut self, reported: u64, counted: u64, plan: &SamplingPlan) {
        self.runs += 1;
        if reported != plan.query_budget() || counted != plan.query_budget() {
            self.mismatches += 1;
        }
    }
}

fn criterion1() -> Outcome {
    let quad = QuadratureSpec::default();
    let mut worst = 0.0f64;
    let mut odd_exact = true;
    for ell in [0u32, 1, 2, 3, 4, 6, 8] {
        for d in [10usize, 100, 1000, 10_000] {
            let exact = moment(ell, d).unwrap();
            let numeric = pushforward_expectation(d, &|y: f64| y.powi(ell as i32), &quad).unwrap();
            worst = worst.max((exact - numeric).abs() / exact.abs().max(1.0));
            if ell % 2 == 1 && exact != 0.0 {
                odd_exact = false;
            }
        }
    }
    outcome(
        worst <= MOMENT_REL_TOL && odd_exact,
        format!("max scaled deviation {worst:.2e} (tol {MOMENT_REL_TOL:e}), odd moments exactly 0: {odd_exact}"),
    )
}

fn criterion2() -> Outcome {
    let quad = QuadratureSpec::default();
    let dims: Vec<usize> = (5..=11).map(|p| 1usize << p).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for m in 1..=3i32 {
        let values: Vec<(f64, f64)> = dims
            .iter()
            .map(|&d| (d as f64, alpha_k1(&|y: f64| y.powi(m), d, &quad).unwrap()))
            .collect();
        let slope = decay_exponent(&values).unwrap();
        pass &= (slope + m as f64).abs() <= SLOPE_TOL;
        parts.push(format!("M={m}: slope {slope:.4}"));
    }
    outcome(pass, format!("{} (window ±{SLOPE_TOL})", parts.join(", ")))
}

fn sparse_signs(d: usize, k: usize, stream: &mut Stream) -> Vec<f64> {
    let mut x = vec![0.0; d];
    for i in sample(stream, d, k) {
        x[i] = if stream.random::<bool>() { 1.0 } else { -1.0 };
    }
    x
}

fn criterion3() -> Outcome {
    let (d, m, k, trials) = (400, 120, 5, 100);
    let mut successes = 0;
    for t in 0..trials {
        let mut s = derive_stream(SEED, &labels!["c3", t]);
        let phi = bernoulli_directions(d, m, &mut s).into_matrix();
        let x = sparse_signs(d, k, &mut s);
        let r = basis_pursuit(&phi, &phi.matvec(&x), &SolveSettings::default()).unwrap();
        let err = norm2(&r.solution.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        successes += (err <= L1_EXACT_TOL) as usize;
    }
    let generator = |t: usize| {
        let mut s = derive_stream(SEED, &labels!["c3-noisy", t]);
        let phi = bernoulli_directions(d, m, &mut s).into_matrix();
        let x = sparse_signs(d, k, &mut s);
        let raw: Vec<f64> = (0..m).map(|_| 2.0 * s.random::<f64>() - 1.0).collect();
        let scale = L1_NOISE_NORM / norm2(&raw);
        NoisyInstance { phi, x, noise: raw.iter().map(|v| v * scale).collect(), k }
    };
    let report = verify_noisy_bound(generator, trials, &SolveSettings::with_residual_tol(L1_NOISE_NORM)).unwrap();
    outcome(
        successes >= L1_MIN_SUCCESSES && report.constant <= L1_MAX_CONSTANT,
        format!(
            "exact recovery in {successes}/{trials} (need {L1_MIN_SUCCESSES}); measured noisy-bound constant C = {:.4} (cap {L1_MAX_CONSTANT})",
            report.constant
        ),
    )
}

fn gaussian(rows: usize, cols: usize, s: &mut Stream) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| s.sample(StandardNormal))
}

fn criterion4() -> Outcome {
    let (k, r, c) = (3, 50, 80);
    let mut violations = 0;
    let mut worst_ratio = 0.0f64;
    for t in 0..WEDIN_INSTANCES {
        let mut s = derive_stream(SEED, &labels!["c4", t]);
        let x = gaussian(r, k, &mut s).matmul(&gaussian(k, c, &mut s)).unwrap();
        let fx = svd(&x).unwrap();
        let e = gaussian(r, c, &mut s);
        let size = s.random::<f64>().max(1e-3) * 0.1 * fx.sigma(k);
        let e = e.scale(size / e.frobenius_norm());
        let fp = svd(&x.add(&e).unwrap()).unwrap();
        let dist = projection_distance(&fx.v.leading_columns(k), &fp.v.leading_columns(k)).unwrap();
        let bound = 2.0 * e.frobenius_norm() / fp.sigma(k);
        worst_ratio = worst_ratio.max(dist / bound);
        violations += (dist > bound) as usize;
    }
    outcome(
        violations == 0,
        format!("{violations} violations in {WEDIN_INSTANCES} instances; max distance/bound {worst_ratio:.4}"),
    )
}

fn tail_ok(name: &str, t: &TailCheck, parts: &mut Vec<String>) -> bool {
    parts.push(format!("{name}: freq {:.4} vs bound {:.4} + 3·{:.4}", t.frequency, t.bound, t.std_error));
    t.holds
}

fn criterion5() -> Outcome {
    let quad = QuadratureSpec::default();
    let mut parts = Vec::new();
    let mut pass = true;
    let det = verify_matrix_chernoff(&DeterministicSampler { k: 3, m: 200 }, 200, 0.5, MC_TRIALS, SEED).unwrap();
    pass &= det.lower.hits == 0;
    pass &= tail_ok("deterministic", &det.lower, &mut parts);
    let rank1 = verify_matrix_chernoff(&RankOneSampler { k: 3, c: 1.0 }, 200, 0.5, MC_TRIALS, SEED).unwrap();
    pass &= tail_ok("rank-one lower", &rank1.lower, &mut parts);
    let rank1_up = verify_matrix_chernoff(&RankOneSampler { k: 3, c: 1.0 }, 200, 2.0, MC_TRIALS, SEED).unwrap();
    match &rank1_up.upper {
        Some(u) => pass &= tail_ok("rank-one upper (s=2)", u, &mut parts),
        None => pass = false,
    }
    let grad = GradientSampler::radial_square(2, 20, &quad).unwrap();
    let radial = verify_matrix_chernoff(&grad, 100, 0.5, MC_TRIALS, SEED).unwrap();
    pass &= tail_ok("radial gradients", &radial.lower, &mut parts);
    let mut a = vec![0.0; 20];
    a[0] = 1.0;
    let constant = verify_hoeffding_max(&|_| 1.0, &a, 1.0, 10, 0.5, MC_TRIALS, SEED, &quad).unwrap();
    pass &= constant.check.hits == 0;
    pass &= tail_ok("hoeffding g'=1", &constant.check, &mut parts);
    let linear = verify_hoeffding_max(&|y| y, &a, 1.0, 200, 0.5, MC_TRIALS, SEED, &quad).unwrap();
    pass &= tail_ok("hoeffding g'=y", &linear.check, &mut parts);
    outcome(pass, parts.join("; "))
}

fn count_inversions(v: &[f64]) -> usize {
    v.windows(2).filter(|w| w[1] > w[0]).count()
}

fn criterion6(acc: &mut Accounting) -> Outcome {
    let (d, m_x, eps) = (1000, 20, 0.1);
    let options = ModelOptions { bar_eps: 0.5, sparsity: 4, q: 1.0 };
    let base = make_class_instance(FunctionClass::F1, d, options, 2.0, derive_seed(SEED, &labels!["c6"])).unwrap();
    let a = base.ridge_matrix().row(0).to_vec();
    let (c2, bar_eps) = (base.spec().c2, base.spec().bar_eps);
    let mut medians = Vec::new();
    let mut chain_violations = 0;
    let mut failures = 0;
    for &m_phi in &[50usize, 100, 200, 400] {
        let mut errors = Vec::new();
        for t in 0..K1_TRIALS {
            let mut o = base.clone();
            let plan = SamplingPlan::new(m_x, m_phi, eps, derive_seed(SEED, &labels!["c6", m_phi, t]));
            let r = match algorithm1(&mut o, &plan, &SolveSettings::default()) {
                Ok(r) => r,
                Err(_) => {
                    failures += 1;
                    continue;
                }
            };
            acc.record(r.queries_used, o.query_count(), &plan);
            let err = sign_aligned_error(&r.a_hat, &a).unwrap();
            errors.push(err);
            let probes = sample_ball(d, K1_PROBES, &mut derive_stream(SEED, &labels!["c6-probe", m_phi, t]));
            for p in 0..K1_PROBES {
                let x = probes.row(p);
                let gap = (o.true_value(x) - o.true_value(&r.project(x))).abs();
                chain_violations += (gap > c2 * (1.0 + bar_eps) * err + CHAIN_ABS) as usize;
            }
        }
        medians.push(median(errors));
    }
    let inversions = count_inversions(&medians);
    outcome(
        inversions <= K1_MAX_INVERSIONS && chain_violations == 0 && failures == 0,
        format!(
            "median errors {:?} at m_Phi 50/100/200/400 ({inversions} inversions), {chain_violations} chain violations, {failures} failed runs",
            medians.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion7(acc: &mut Accounting) -> Outcome {
    let (d, m_phi, m_x, eps) = (200, 250, 40, 0.1);
    let base = ModelTemplate::SinSquare
        .build(d, ModelOptions::default(), derive_seed(SEED, &labels!["c7"]))
        .unwrap();
    let a = base.ridge_matrix().clone();
    let (c2, bar_eps) = (base.spec().c2, base.spec().bar_eps);
    let (mut checked, mut wedin_violations, mut chain_violations, mut failures) = (0, 0, 0, 0);
    let mut worst_ratio = 0.0f64;
    for t in 0..K2_TRIALS {
        let mut o = base.clone();
        let plan = SamplingPlan::new(m_x, m_phi, eps, derive_seed(SEED, &labels!["c7", t]));
        // Φ is tall here, so decode to the Taylor-remainder tolerance
        let settings = SolveSettings::with_residual_tol(taylor_column_bound(o.spec(), &plan));
        let result = build_sketch(&mut o, &plan, &settings).and_then(|s| k_from_sketch(&s, 2).map(|r| (s, r)));
        let (sketch, r) = match result {
            Ok(v) => v,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        acc.record(r.queries_used, o.query_count(), &plan);
        let err = subspace_error(&r.a_hat, &a).unwrap();
        let e = sketch.true_gradients(&o).sub(&sketch.x_hat).unwrap().frobenius_norm();
        let sigma_k = r.sigma[1];
        if sigma_k > e {
            checked += 1;
            let bound = 2.0 * e / sigma_k;
            worst_ratio = worst_ratio.max(err / bound);
            wedin_violations += (err > bound + CHAIN_ABS) as usize;
        }
        let probes = sample_ball(d, K2_PROBES, &mut derive_stream(SEED, &labels!["c7-probe", t]));
        for p in 0..K2_PROBES {
            let x = probes.row(p);
            let gap = (o.true_value(x) - o.true_value(&r.project(x))).abs();
            let bound = c2 * 2f64.sqrt() * (1.0 + bar_eps) * err * norm2(x);
            chain_violations += (gap > bound + CHAIN_ABS) as usize;
        }
    }
    outcome(
        wedin_violations == 0 && chain_violations == 0 && failures == 0,
        format!(
            "Wedin chain checked in {checked}/{K2_TRIALS} trials, {wedin_violations} violations (max ratio {worst_ratio:.4}); {chain_violations} pointwise violations; {failures} failed runs"
        ),
    )
}

fn criterion8(acc: &mut Accounting) -> Outcome {
    let cfg = ExperimentConfig::figure2();
    let start = Instant::now();
    let grid = run_phase_diagram(&cfg).unwrap();
    let elapsed = start.elapsed();
    let rerun = run_phase_diagram(&cfg).unwrap();
    let identical = grid.to_csv() == rerun.to_csv() && heatmap_bytes(&grid, None) == heatmap_bytes(&rerun, None);
    let corner = grid.cell(60, 200, 0.001).map_or(0.0, |c| c.rate);
    let mut monotone_violations = 0;
    for c in grid.cells.iter().filter(|c| c.nu == 0.001) {
        let noisy = grid.cell(c.m_x, c.m_phi, 0.1).unwrap();
        monotone_violations += (c.rate < noisy.rate - FIG2_SLACK) as usize;
    }
    for c in &grid.cells {
        let plan = SamplingPlan::new(c.m_x, c.m_phi, cfg.epsilon, 0);
        let exact = c.mean_queries == plan.query_budget() as f64;
        acc.runs += c.trials;
        acc.mismatches += if exact { 0 } else { c.trials };
    }
    let smoke_start = Instant::now();
    run_phase_diagram(&ExperimentConfig::figure2().into_smoke()).unwrap();
    let smoke = smoke_start.elapsed();
    outcome(
        corner >= FIG2_MIN_RATE && monotone_violations == 0 && identical && elapsed < FIG2_BUDGET && smoke < SMOKE_BUDGET,
        format!(
            "(a) rate at (60,200,0.001) = {corner} (need {FIG2_MIN_RATE}); (b) {monotone_violations} cells below rate(0.1) − {FIG2_SLACK}; (c) rerun identical: {identical}; grid {:.0} s, smoke {:.1} s",
            elapsed.as_secs_f64(),
            smoke.as_secs_f64()
        ),
    )
}

fn criterion9(acc: &Accounting) -> Outcome {
    outcome(
        acc.runs > 0 && acc.mismatches == 0,
        format!("{} recovery runs, {} with queries_used != m_X(m_Phi+1)", acc.runs, acc.mismatches),
    )
}

fn report(n: usize, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        if elapsed > b {
            o.pass = false;
            o.detail.push_str(&format!("; over budget ({:.1} s > {:.0} s)", elapsed.as_secs_f64(), b.as_secs_f64()));
        }
    }
    let line = format!(
        "criterion {n}: {} [{:.1} s] {}\n",
        if o.pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        o.detail
    );
    let mut err = std::io::stderr().lock();
    err.write_all(line.as_bytes()).unwrap();
    err.flush().unwrap();
    o.pass
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| selected.is_empty() || selected.contains(&n);
    let mut acc = Accounting::default();
    let mut all = true;
    if wanted(1) {
        all &= report(1, Some(MOMENT_BUDGET), criterion1);
    }
    if wanted(2) {
        all &= report(2, Some(DECAY_BUDGET), criterion2);
    }
    if wanted(3) {
        all &= report(3, Some(L1_BUDGET), criterion3);
    }
    if wanted(4) {
        all &= report(4, Some(WEDIN_BUDGET), criterion4);
    }
    if wanted(5) {
        all &= report(5, Some(MC_BUDGET), criterion5);
    }
    if wanted(6) {
        all &= report(6, Some(K1_BUDGET), || criterion6(&mut acc));
    }
    if wanted(7) {
        all &= report(7, Some(K2_BUDGET), || criterion7(&mut acc));
    }
    if wanted(8) {
        all &= report(8, None, || criterion8(&mut acc));
    }
    if wanted(9) {
        all &= report(9, None, || criterion9(&acc));
    }
    if !all {
        std::process::exit(1);
    }
}

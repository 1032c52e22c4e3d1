//! Recovery of the ridge directions from point queries.
//!
//! [`build_sketch`] spends exactly `m_X·(m_Φ + 1)` queries on finite
//! differences `Y_ij = (f(ξ_j + εφ_i) − f(ξ_j))/ε`, then decodes every column
//! of `Y` with the ℓ1 decoder to estimate the gradients `∇f(ξ_j)`.
//! [`algorithm1`] normalizes the largest decoded gradient; [`algorithm2`]
//! takes the top-`k` right singular vectors of `X̂ᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::l1::{decode_columns, SolveSettings, SolveStatus};
use crate::labels;
use crate::linalg::{best_k_term, norm2, projection_distance, svd, DenseMatrix};
use crate::oracle::{ModelSpec, RidgeOracle};
use crate::sampling::{bernoulli_directions, derive_stream, SamplingPlan};

/// Signals at or below this norm are treated as zero.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Finite-difference data of one run together with its decoded gradients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradientSketch {
    pub plan: SamplingPlan,
    /// `m_Φ × d` direction matrix.
    pub phi: DenseMatrix,
    /// Sampling points `ξ_j`, one per row.
    pub points: DenseMatrix,
    /// `m_Φ × m_X` finite differences.
    pub y: DenseMatrix,
    /// `d × m_X` decoded gradients.
    pub x_hat: DenseMatrix,
    pub converged: Vec<bool>,
    pub statuses: Vec<SolveStatus>,
    pub residuals: Vec<f64>,
    pub queries_used: u64,
}

impl GradientSketch {
    pub fn dim(&self) -> usize {
        self.x_hat.rows()
    }

    /// Exact gradients `∇f(ξ_j)` as a `d × m_X` matrix (ground truth).
    pub fn true_gradients(&self, oracle: &RidgeOracle) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = (0..self.points.rows())
            .map(|j| oracle.true_gradient(self.points.row(j)))
            .collect();
        DenseMatrix::from_columns(&cols).expect("finite gradients")
    }

    /// Per-column error proxy: ℓ2 tail beyond the best `K*` terms plus the
    /// decoder residual, with `K* = ⌊m_Φ / ln(d/m_Φ)⌋`.
    pub fn residual_proxies(&self) -> Vec<f64> {
        let (d, m) = (self.dim(), self.plan.m_phi);
        let ratio = d as f64 / m as f64;
        let k_star = if ratio > 1.0 {
            ((m as f64 / ratio.ln()).floor() as usize).clamp(1, d)
        } else {
            d
        };
        (0..self.x_hat.cols())
            .map(|j| {
                let col = self.x_hat.column(j);
                let best = best_k_term(&col, k_star).expect("k_star within range");
                let tail: Vec<f64> = col.iter().zip(&best).map(|(a, b)| a - b).collect();
                norm2(&tail) + self.residuals[j]
            })
            .collect()
    }
}

/// Bound on `‖Y_j − Φ∇f(ξ_j)‖₂` for one column of noiseless quotients:
/// `ε k² C1² C2 / (2√m_Φ)`. Usable as a decoder tolerance when `Y` need not
/// lie in the range of `Φ`, e.g. when `m_Φ ≥ d`.
pub fn taylor_column_bound(spec: &ModelSpec, plan: &SamplingPlan) -> f64 {
    let k = spec.k as f64;
    plan.epsilon * k * k * spec.c1 * spec.c1 * spec.c2 / (2.0 * (plan.m_phi as f64).sqrt())
}

/// Queries the oracle on the plan's points and directions and decodes `Y`.
pub fn build_sketch(
    oracle: &mut RidgeOracle,
    plan: &SamplingPlan,
    settings: &SolveSettings,
) -> Result<GradientSketch> {
    let d = oracle.dim();
    let domain = oracle.domain();
    plan.validate(d, domain, oracle.spec().bar_eps)?;
    settings.validate()?;

    let points = domain.sample_points(d, plan.m_x, &mut derive_stream(plan.seed, &labels!["points"]));
    let phi = bernoulli_directions(d, plan.m_phi, &mut derive_stream(plan.seed, &labels!["phi"]))
        .into_matrix();

    let start = oracle.query_count();
    let mut y = DenseMatrix::zeros(plan.m_phi, plan.m_x);
    let mut probe = vec![0.0; d];
    for j in 0..plan.m_x {
        let xi = points.row(j);
        let f0 = oracle.evaluate(xi)?;
        for i in 0..plan.m_phi {
            for ((p, x), v) in probe.iter_mut().zip(xi).zip(phi.row(i)) {
                *p = x + plan.epsilon * v;
            }
            y[(i, j)] = (oracle.evaluate(&probe)? - f0) / plan.epsilon;
        }
    }
    let queries_used = oracle.query_count() - start;
    debug_assert_eq!(queries_used, plan.query_budget());

    let decoded = decode_columns(&phi, &y, settings)?;
    if !decoded.converged.iter().any(|&c| c) {
        return Err(Error::SketchFailure(format!(
            "none of the {} columns decoded to tolerance",
            plan.m_x
        )));
    }
    Ok(GradientSketch {
        plan: plan.clone(),
        phi,
        points,
        y,
        statuses: decoded.reports.iter().map(|r| r.status).collect(),
        residuals: decoded.reports.iter().map(|r| r.final_residual).collect(),
        converged: decoded.converged,
        x_hat: decoded.x_hat,
        queries_used,
    })
}

/// Output of the single-direction algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct K1Result {
    pub a_hat: Vec<f64>,
    pub j0: usize,
    pub xnorm_j0: f64,
    pub queries_used: u64,
    /// A posteriori ratio; values well below one indicate a reliable estimate.
    pub indicator: f64,
    pub seed: u64,
    pub plan: SamplingPlan,
    pub converged_columns: usize,
}

/// Output of the `k`-dimensional algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KResult {
    #[serde(rename = "A_hat")]
    pub a_hat: DenseMatrix,
    /// Singular values of `X̂ᵀ`, non-increasing.
    pub sigma: Vec<f64>,
    pub queries_used: u64,
    pub indicator: f64,
    pub seed: u64,
    pub plan: SamplingPlan,
    pub converged_columns: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Picks the decoded column of largest norm (first one on ties) and normalizes it.
pub fn k1_from_sketch(sketch: &GradientSketch) -> Result<K1Result> {
    let norms: Vec<f64> = (0..sketch.x_hat.cols()).map(|j| norm2(&sketch.x_hat.column(j))).collect();
    let (j0, &xnorm) = norms
        .iter()
        .enumerate()
        .fold((0, &0.0), |best, (j, n)| if *n > *best.1 { (j, n) } else { best });
    if xnorm <= DEGENERATE_TOL {
        return Err(Error::DegenerateSignal(format!(
            "largest decoded gradient has norm {xnorm:e}"
        )));
    }
    let a_hat: Vec<f64> = sketch.x_hat.column(j0).iter().map(|v| v / xnorm).collect();
    let mut proxies = sketch.residual_proxies();
    Ok(K1Result {
        a_hat,
        j0,
        xnorm_j0: xnorm,
        queries_used: sketch.queries_used,
        indicator: 2.0 * median(&mut proxies) / xnorm,
        seed: sketch.plan.seed,
        plan: sketch.plan.clone(),
        converged_columns: sketch.converged.iter().filter(|&&c| c).count(),
    })
}

/// Top-`k` right singular vectors of `X̂ᵀ`.
pub fn k_from_sketch(sketch: &GradientSketch, k: usize) -> Result<KResult> {
    check_rank(k, sketch.dim(), sketch.plan.m_x)?;
    let f = svd(&sketch.x_hat.transpose())?;
    let sigma_k = f.sigma(k);
    if sigma_k <= DEGENERATE_TOL {
        return Err(Error::DegenerateSignal(format!("sigma_{k} of the decoded gradients is {sigma_k:e}")));
    }
    let a_hat = f.v.leading_columns(k).transpose();
    let proxies = sketch.residual_proxies();
    let total = proxies.iter().map(|p| p * p).sum::<f64>().sqrt();
    Ok(KResult {
        a_hat,
        sigma: f.singular_values,
        queries_used: sketch.queries_used,
        indicator: 2.0 * total / sigma_k,
        seed: sketch.plan.seed,
        plan: sketch.plan.clone(),
        converged_columns: sketch.converged.iter().filter(|&&c| c).count(),
    })
}

fn check_rank(k: usize, d: usize, m_x: usize) -> Result<()> {
    if k == 0 || k > d.min(m_x) {
        return invalid(format!("k = {k} must lie in 1..={}", d.min(m_x)));
    }
    Ok(())
}

/// Single-direction recovery.
pub fn algorithm1(
    oracle: &mut RidgeOracle,
    plan: &SamplingPlan,
    settings: &SolveSettings,
) -> Result<K1Result> {
    k1_from_sketch(&build_sketch(oracle, plan, settings)?)
}

/// `k`-dimensional subspace recovery.
pub fn algorithm2(
    oracle: &mut RidgeOracle,
    k: usize,
    plan: &SamplingPlan,
    settings: &SolveSettings,
) -> Result<KResult> {
    check_rank(k, oracle.dim(), plan.m_x)?;
    k_from_sketch(&build_sketch(oracle, plan, settings)?, k)
}

/// An estimate of the ridge rows, usable to build the surrogate `f̂(x) = f(ÂᵀÂx)`.
pub trait RidgeEstimate {
    /// Orthogonal projection `ÂᵀÂx`.
    fn project(&self, x: &[f64]) -> Vec<f64>;
}

impl RidgeEstimate for K1Result {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        let t: f64 = self.a_hat.iter().zip(x).map(|(a, b)| a * b).sum();
        self.a_hat.iter().map(|a| a * t).collect()
    }
}

impl RidgeEstimate for KResult {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        self.a_hat.t_matvec(&self.a_hat.matvec(x))
    }
}

impl RidgeEstimate for DenseMatrix {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        self.t_matvec(&self.matvec(x))
    }
}

/// `f̂(x) = f(ÂᵀÂx)`, one oracle query.
pub fn surrogate_evaluate(est: &impl RidgeEstimate, oracle: &mut RidgeOracle, x: &[f64]) -> Result<f64> {
    if x.len() != oracle.dim() {
        return invalid("probe dimension does not match the oracle");
    }
    oracle.evaluate(&est.project(x))
}

/// The `k` coordinates carrying the largest row norms of `X̂`, in increasing order.
pub fn identify_active_coordinates(sketch: &GradientSketch, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > sketch.dim() {
        return invalid(format!("k = {k} must lie in 1..={}", sketch.dim()));
    }
    let norms: Vec<f64> = (0..sketch.dim()).map(|i| norm2(sketch.x_hat.row(i))).collect();
    if norms.iter().all(|&n| n <= DEGENERATE_TOL) {
        return Err(Error::DegenerateSignal("all decoded rows vanish".into()));
    }
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut top = order[..k].to_vec();
    top.sort_unstable();
    Ok(top)
}

/// `min_{s = ±1} ‖s·â − a‖₂`.
pub fn sign_aligned_error(a_hat: &[f64], a: &[f64]) -> Result<f64> {
    if a_hat.len() != a.len() {
        return invalid("vectors differ in length");
    }
    let plus: f64 = a_hat.iter().zip(a).map(|(x, y)| (x - y).powi(2)).sum();
    let minus: f64 = a_hat.iter().zip(a).map(|(x, y)| (x + y).powi(2)).sum();
    Ok(plus.min(minus).sqrt())
}

/// `‖AᵀA − ÂᵀÂ‖_F`.
///
/// For row-orthonormal inputs this equals the projection distance between the
/// row spaces, which is evaluated without cancellation; other inputs go
/// through `k × k` Gram matrices.
pub fn subspace_error(a_hat: &DenseMatrix, a: &DenseMatrix) -> Result<f64> {
    if a_hat.cols() != a.cols() {
        return invalid("matrices have different ambient dimensions");
    }
    if a_hat.rows() == a.rows()
        && a_hat.row_orthonormality_defect() <= 1e-10
        && a.row_orthonormality_defect() <= 1e-10
    {
        return projection_distance(&a_hat.transpose(), &a.transpose());
    }
    let sq = |m: &DenseMatrix| m.frobenius_norm().powi(2);
    let aa = sq(&a.matmul_t(a)?);
    let bb = sq(&a_hat.matmul_t(a_hat)?);
    let ab = sq(&a.matmul_t(a_hat)?);
    Ok((aa + bb - 2.0 * ab).max(0.0).sqrt())
}

/// Rank suggested by the largest ratio `σ_i / σ_{i+1}`; never applied implicitly.
pub fn suggest_rank(sigma: &[f64]) -> usize {
    let mut best = (1, 0.0);
    for i in 0..sigma.len().saturating_sub(1) {
        let ratio = if sigma[i + 1] > 0.0 {
            sigma[i] / sigma[i + 1]
        } else if sigma[i] > 0.0 {
            f64::INFINITY
        } else {
            continue;
        };
        if ratio > best.1 {
            best = (i + 1, ratio);
        }
    }
    best.0
}

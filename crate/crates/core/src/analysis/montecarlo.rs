//! Monte-Carlo checks of the concentration inequalities behind the sample
//! complexity bounds. Trials run in parallel on streams derived from
//! `(seed, label, trial)` and are reduced in trial order.

use std::f64::consts::E;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{alpha_k1, alpha_radial, QuadratureSpec};
use crate::error::{invalid, Result};
use crate::labels;
use crate::linalg::{dot, svd, DenseMatrix};
use crate::oracle::{Profile, Radial, Scalar};
use crate::sampling::{derive_stream, sample_sphere, Stream};

// relative slack when checking a sample against its norm bound
const BOUND_SLACK: f64 = 1e-9;

/// Empirical frequency of a tail event against its theoretical bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub trials: usize,
    pub hits: usize,
    pub frequency: f64,
    pub bound: f64,
    /// Binomial standard error at the larger of `frequency` and `bound` (capped at 1).
    pub std_error: f64,
    /// `frequency ≤ bound + 3·std_error`.
    pub holds: bool,
}

impl TailCheck {
    fn new(trials: usize, hits: usize, bound: f64) -> Self {
        let n = trials as f64;
        let frequency = hits as f64 / n;
        let p = frequency.max(bound).min(1.0);
        let std_error = (p * (1.0 - p) / n).sqrt();
        Self {
            trials,
            hits,
            frequency,
            bound,
            std_error,
            holds: frequency <= bound + 3.0 * std_error,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingReport {
    pub alpha: f64,
    /// `√(α(1−s))`.
    pub threshold: f64,
    /// Failures of `max_j |g'(a·ξ_j)| ≥ threshold`.
    pub check: TailCheck,
}

/// Checks that `max_j |g'(a·ξ_j)| ≥ √(α(1−s))` fails with frequency at most
/// `2e^{−2 m_X s² α²/C₂⁴}` over independent sets of `m_X` sphere points.
#[allow(clippy::too_many_arguments)]
pub fn verify_hoeffding_max(
    gprime: &(dyn Fn(f64) -> f64 + Sync),
    a: &[f64],
    c2: f64,
    m_x: usize,
    s: f64,
    trials: usize,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<HoeffdingReport> {
    let d = a.len();
    if trials == 0 || m_x == 0 {
        return invalid("trials and m_x must be positive");
    }
    if !(s > 0.0 && s < 1.0) {
        return invalid(format!("s must lie in (0, 1), got {s}"));
    }
    if (dot(a, a) - 1.0).abs() > 1e-10 {
        return invalid("a must be a unit vector");
    }
    let alpha = alpha_k1(gprime, d, quad)?;
    let threshold = (alpha * (1.0 - s)).sqrt();
    let outcomes: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = derive_stream(seed, &labels!["hoeffding", t]);
            let pts = sample_sphere(d, m_x, &mut stream);
            let mut best = 0.0f64;
            for j in 0..m_x {
                let v = gprime(dot(pts.row(j), a)).abs();
                if v > c2 * (1.0 + BOUND_SLACK) {
                    return invalid(format!("|g'| = {v} exceeds C2 = {c2}"));
                }
                best = best.max(v);
            }
            Ok(best < threshold)
        })
        .collect();
    let mut hits = 0;
    for o in outcomes {
        hits += o? as usize;
    }
    let bound = (2.0 * (-2.0 * m_x as f64 * s * s * alpha * alpha / c2.powi(4)).exp()).min(1.0);
    Ok(HoeffdingReport {
        alpha,
        threshold,
        check: TailCheck::new(trials, hits, bound),
    })
}

/// Source of independent random positive semidefinite `k × k` matrices with
/// spectral norm at most [`PsdSampler::norm_bound`].
pub trait PsdSampler: Sync {
    fn dim(&self) -> usize;
    fn norm_bound(&self) -> f64;
    /// Expectation of one sample.
    fn mean(&self) -> DenseMatrix;
    fn sample(&self, stream: &mut Stream) -> DenseMatrix;
}

/// Always returns `I_k / m`.
#[derive(Clone, Debug)]
pub struct DeterministicSampler {
    pub k: usize,
    pub m: usize,
}

impl PsdSampler for DeterministicSampler {
    fn dim(&self) -> usize {
        self.k
    }

    fn norm_bound(&self) -> f64 {
        1.0 / self.m as f64
    }

    fn mean(&self) -> DenseMatrix {
        DenseMatrix::identity(self.k).scale(1.0 / self.m as f64)
    }

    fn sample(&self, _stream: &mut Stream) -> DenseMatrix {
        self.mean()
    }
}

/// `vvᵀ` with `v` uniform on the sphere of radius `√c` in `R^k`.
#[derive(Clone, Debug)]
pub struct RankOneSampler {
    pub k: usize,
    pub c: f64,
}

fn outer(v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j])
}

impl PsdSampler for RankOneSampler {
    fn dim(&self) -> usize {
        self.k
    }

    fn norm_bound(&self) -> f64 {
        self.c
    }

    fn mean(&self) -> DenseMatrix {
        DenseMatrix::identity(self.k).scale(self.c / self.k as f64)
    }

    fn sample(&self, stream: &mut Stream) -> DenseMatrix {
        let v = sample_sphere(self.k, 1, stream);
        outer(&v.row(0).iter().map(|x| x * self.c.sqrt()).collect::<Vec<_>>())
    }
}

/// `∇g(y)∇g(y)ᵀ` with `y` distributed as the push-forward `μ_k` of the sphere
/// in `R^d`; the norm bound is `k C₂²`.
#[derive(Clone, Debug)]
pub struct GradientSampler {
    pub profile: Arc<dyn Profile>,
    pub d: usize,
    pub c2: f64,
    pub mean: DenseMatrix,
}

impl GradientSampler {
    /// `g(y) = ‖y‖²`, whose gradient outer product has mean `α(k, d) I_k`.
    pub fn radial_square(k: usize, d: usize, quad: &QuadratureSpec) -> Result<Self> {
        let alpha = alpha_radial(&|r| 2.0 * r, k, d, quad)?;
        Ok(Self {
            profile: Arc::new(Radial {
                g0: Arc::new(Scalar::Poly(vec![0.0, 0.0, 1.0])),
                k,
            }),
            d,
            c2: 2.0,
            mean: DenseMatrix::identity(k).scale(alpha),
        })
    }
}

impl PsdSampler for GradientSampler {
    fn dim(&self) -> usize {
        self.profile.dim()
    }

    fn norm_bound(&self) -> f64 {
        self.dim() as f64 * self.c2 * self.c2
    }

    fn mean(&self) -> DenseMatrix {
        self.mean.clone()
    }

    fn sample(&self, stream: &mut Stream) -> DenseMatrix {
        // rotation invariance lets A = [I_k 0]
        let x = sample_sphere(self.d, 1, stream);
        outer(&self.profile.gradient(&x.row(0)[..self.dim()]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernoffReport {
    pub mu_min: f64,
    pub mu_max: f64,
    pub norm_bound: f64,
    /// `σ_k(ΣX_j) ≤ (1−s)μ_min` against `k e^{−μ_min s²/(2C)}`.
    pub lower: TailCheck,
    /// `σ_1(ΣX_j) ≥ (1+s)μ_max` against `k((1+s)/e)^{−μ_max(1+s)/C}`, only for `s > e − 1`.
    pub upper: Option<TailCheck>,
}

/// Tail frequencies of the extreme eigenvalues of `Σ_{j≤m} X_j`.
pub fn verify_matrix_chernoff(
    sampler: &dyn PsdSampler,
    m: usize,
    s: f64,
    trials: usize,
    seed: u64,
) -> Result<ChernoffReport> {
    if trials == 0 || m == 0 {
        return invalid("trials and m must be positive");
    }
    if !(s > 0.0 && s.is_finite()) {
        return invalid("s must be positive");
    }
    let k = sampler.dim();
    let c = sampler.norm_bound();
    let mean_sv = svd(&sampler.mean().scale(m as f64))?;
    let (mu_min, mu_max) = (mean_sv.sigma(k), mean_sv.sigma(1));
    let outcomes: Vec<Result<(bool, bool)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = derive_stream(seed, &labels!["chernoff", t]);
            let mut sum = DenseMatrix::zeros(k, k);
            for _ in 0..m {
                let x = sampler.sample(&mut stream);
                let trace: f64 = (0..k).map(|i| x[(i, i)]).sum();
                if trace > c * (1.0 + BOUND_SLACK) && svd(&x)?.sigma(1) > c * (1.0 + BOUND_SLACK) {
                    return invalid(format!("sample norm exceeds the declared bound {c}"));
                }
                sum = sum.add(&x)?;
            }
            let sv = svd(&sum)?;
            Ok((sv.sigma(k) <= (1.0 - s) * mu_min, sv.sigma(1) >= (1.0 + s) * mu_max))
        })
        .collect();
    let (mut lo, mut hi) = (0, 0);
    for o in outcomes {
        let (a, b) = o?;
        lo += a as usize;
        hi += b as usize;
    }
    let kf = k as f64;
    let lower_bound = (kf * (-mu_min * s * s / (2.0 * c)).exp()).min(1.0);
    let upper = (s > E - 1.0).then(|| {
        let b = kf * ((1.0 + s) / E).powf(-mu_max * (1.0 + s) / c);
        TailCheck::new(trials, hi, b.min(1.0))
    });
    Ok(ChernoffReport {
        mu_min,
        mu_max,
        norm_bound: c,
        lower: TailCheck::new(trials, lo, lower_bound),
        upper,
    })
}

/// Monte-Carlo estimate of `H_g = E[∇g(y)∇g(y)ᵀ]` under `μ_k`, with entrywise standard errors.
pub fn estimate_gradient_outer(
    profile: &dyn Profile,
    d: usize,
    samples: usize,
    seed: u64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let k = profile.dim();
    if k >= d || samples < 2 {
        return invalid("need k < d and at least two samples");
    }
    let mut stream = derive_stream(seed, &labels!["hg"]);
    let mut sum = vec![0.0; k * k];
    let mut sum_sq = vec![0.0; k * k];
    for _ in 0..samples {
        let x = sample_sphere(d, 1, &mut stream);
        let g = profile.gradient(&x.row(0)[..k]);
        for i in 0..k {
            for j in 0..k {
                let v = g[i] * g[j];
                sum[i * k + j] += v;
                sum_sq[i * k + j] += v * v;
            }
        }
    }
    let n = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se: Vec<f64> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| ((q / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    Ok((DenseMatrix::new(k, k, mean)?, DenseMatrix::new(k, k, se)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_derivative_never_fails() {
        let a = [1.0, 0.0, 0.0, 0.0];
        let r = verify_hoeffding_max(&|_| 1.0, &a, 1.0, 5, 0.5, 200, 1, &QuadratureSpec::default())
            .unwrap();
        assert_eq!(r.check.hits, 0);
        assert!(r.check.holds);
    }

    #[test]
    fn deterministic_sampler_has_no_tail() {
        let r = verify_matrix_chernoff(&DeterministicSampler { k: 3, m: 10 }, 10, 0.5, 50, 1).unwrap();
        assert!((r.mu_min - 1.0).abs() < 1e-12);
        assert_eq!(r.lower.hits, 0);
        assert!(r.lower.holds);
    }

    #[test]
    fn bound_violation_is_detected() {
        struct Liar;
        impl PsdSampler for Liar {
            fn dim(&self) -> usize {
                2
            }
            fn norm_bound(&self) -> f64 {
                0.5
            }
            fn mean(&self) -> DenseMatrix {
                DenseMatrix::identity(2)
            }
            fn sample(&self, _: &mut Stream) -> DenseMatrix {
                DenseMatrix::identity(2)
            }
        }
        assert!(verify_matrix_chernoff(&Liar, 3, 0.5, 4, 1).is_err());
    }
}

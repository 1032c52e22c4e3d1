//! Ground-truth ridge models `f(x) = g(Ax)` behind a point-query interface.
//!
//! A [`RidgeOracle`] only answers point evaluations, counts every answered
//! query and optionally perturbs answers with noise. Ground-truth accessors
//! (the matrix `A`, the true gradient) exist for test-side error metrics and
//! are never used by the recovery algorithms.

mod models;
mod profile;

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{lp_norm, DenseMatrix};
use crate::sampling::{derive_stream, Domain, Stream};

pub use models::{
    make_cap_counterexample, make_class_instance, make_figure2, make_radial,
    reduce_to_row_orthonormal, sparse_row_orthonormal, FunctionClass, ModelOptions,
    ModelTemplate, FIGURE2_ACTIVE,
};
pub use profile::{
    sampled_derivative_bound, Bump, FnScalar, Precomposed, ProbeRegion, Profile, Radial,
    Ridge1, Scalar, ScalarFn, Separable, PROBE_GRID,
};

/// Tolerance on `‖AA^T − I‖_F` for oracle construction.
pub const ROW_ORTHONORMAL_TOL: f64 = 1e-10;

/// Constants describing a model instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: usize,
    pub k: usize,
    /// Compressibility exponent `q ∈ (0, 1]`.
    pub q: f64,
    /// Largest `ℓ_q` norm among the rows of `A`.
    pub c1: f64,
    /// Sampled bound on `g` and its first two derivatives.
    pub c2: f64,
    pub bar_eps: f64,
    pub domain: Domain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    /// `ν·N(0,1)` added to every answer.
    Gaussian,
    /// Uniform on `[−ν, ν]`.
    Bounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn gaussian(level: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            level,
        }
    }

    pub fn bounded(level: f64) -> Self {
        Self {
            kind: NoiseKind::Bounded,
            level,
        }
    }

    /// Standard deviation of one noise draw.
    pub fn std_dev(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian => self.level,
            NoiseKind::Bounded => self.level / 3f64.sqrt(),
        }
    }

    /// Root-mean-square norm of the noise in one column of finite-difference
    /// quotients: `σ√(2 m_Φ)/ε`.
    pub fn quotient_column_norm(&self, m_phi: usize, epsilon: f64) -> f64 {
        self.std_dev() * (2.0 * m_phi as f64).sqrt() / epsilon
    }

    fn draw(&self, stream: &mut Stream) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian => self.level * stream.sample::<f64, _>(StandardNormal),
            NoiseKind::Bounded => self.level * (2.0 * stream.random::<f64>() - 1.0),
        }
    }
}

/// Black-box ridge function with query accounting.
///
/// Evaluation takes `&mut self` because of the query counter and the noise
/// stream; parallel trials each work on their own [`RidgeOracle::fork`].
#[derive(Clone, Debug)]
pub struct RidgeOracle {
    spec: ModelSpec,
    a: DenseMatrix,
    profile: Arc<dyn Profile>,
    noise: NoiseSpec,
    noise_stream: Stream,
    queries: u64,
}

impl RidgeOracle {
    /// Builds an oracle around a row-orthonormal `A`, computing `C1` from the
    /// rows of `A` and `C2` by the probe-grid spot check.
    pub fn new(
        a: DenseMatrix,
        profile: Arc<dyn Profile>,
        q: f64,
        bar_eps: f64,
        domain: Domain,
    ) -> Result<Self> {
        let region = probe_region(&a, bar_eps, domain);
        let c2 = sampled_derivative_bound(profile.as_ref(), &region);
        Self::with_c2(a, profile, q, bar_eps, domain, c2)
    }

    /// Like [`RidgeOracle::new`] with a caller-supplied `C2`.
    pub fn with_c2(
        a: DenseMatrix,
        profile: Arc<dyn Profile>,
        q: f64,
        bar_eps: f64,
        domain: Domain,
        c2: f64,
    ) -> Result<Self> {
        let (k, d) = a.shape();
        if k == 0 || d == 0 {
            return invalid("A must be non-empty");
        }
        if profile.dim() != k {
            return invalid(format!(
                "link function has dimension {} but A has {k} rows",
                profile.dim()
            ));
        }
        if !(q > 0.0 && q <= 1.0) {
            return invalid(format!("q must lie in (0, 1], got {q}"));
        }
        if !(bar_eps >= 0.0 && bar_eps.is_finite()) {
            return invalid("bar_eps must be a finite non-negative number");
        }
        let defect = a.row_orthonormality_defect();
        if defect > ROW_ORTHONORMAL_TOL {
            return invalid(format!("A is not row-orthonormal (defect {defect:e})"));
        }
        let c1 = (0..k)
            .map(|i| lp_norm(a.row(i), q))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Self {
            spec: ModelSpec {
                d,
                k,
                q,
                c1,
                c2,
                bar_eps,
                domain,
            },
            a,
            profile,
            noise: NoiseSpec::none(),
            noise_stream: derive_stream(0, &[]),
            queries: 0,
        })
    }

    /// Replaces the noise model and its random stream.
    pub fn with_noise(mut self, noise: NoiseSpec, stream: Stream) -> Self {
        self.noise = noise;
        self.noise_stream = stream;
        self
    }

    /// Copy with a zeroed query counter and a fresh noise stream.
    pub fn fork(&self, noise_stream: Stream) -> Self {
        let mut o = self.clone();
        o.noise_stream = noise_stream;
        o.queries = 0;
        o
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn ridge_dim(&self) -> usize {
        self.spec.k
    }

    pub fn domain(&self) -> Domain {
        self.spec.domain
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    pub fn reset_query_count(&mut self) {
        self.queries = 0;
    }

    /// Answers one point query: `g(Ax)` plus a noise draw.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.spec.d {
            return invalid(format!(
                "query has dimension {} but the oracle expects {}",
                x.len(),
                self.spec.d
            ));
        }
        if !self.spec.domain.contains(x, self.spec.bar_eps) {
            return Err(Error::DomainViolation(format!(
                "{:?} domain with margin {}",
                self.spec.domain, self.spec.bar_eps
            )));
        }
        let value = self.profile.value(&self.a.matvec(x)) + self.noise.draw(&mut self.noise_stream);
        self.queries += 1;
        Ok(value)
    }

    // Ground truth, for test-side metrics only.

    /// The row-orthonormal `k × d` matrix `A`.
    pub fn ridge_matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn profile(&self) -> &Arc<dyn Profile> {
        &self.profile
    }

    /// Noise-free `g(Ax)` without touching the query counter.
    pub fn true_value(&self, x: &[f64]) -> f64 {
        self.profile.value(&self.a.matvec(x))
    }

    /// `∇f(x) = A^T ∇g(Ax)`.
    pub fn true_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.a.t_matvec(&self.profile.gradient(&self.a.matvec(x)))
    }

    /// Coordinates on which `f` depends: the non-zero columns of `A`.
    pub fn active_coordinates(&self) -> Vec<usize> {
        (0..self.spec.d)
            .filter(|&j| (0..self.spec.k).any(|i| self.a[(i, j)] != 0.0))
            .collect()
    }
}

/// Region of `R^k` reachable as `Ax` for queries inside the domain.
pub(crate) fn probe_region(a: &DenseMatrix, bar_eps: f64, domain: Domain) -> ProbeRegion {
    match domain {
        Domain::Ball => ProbeRegion::Ball {
            radius: 1.0 + bar_eps,
        },
        Domain::UnitCube => {
            let (lo_x, hi_x) = (-bar_eps, 1.0 + bar_eps);
            let mut lo = vec![0.0; a.rows()];
            let mut hi = vec![0.0; a.rows()];
            for i in 0..a.rows() {
                for &v in a.row(i) {
                    lo[i] += (v * lo_x).min(v * hi_x);
                    hi[i] += (v * lo_x).max(v * hi_x);
                }
            }
            ProbeRegion::Box { lo, hi }
        }
    }
}

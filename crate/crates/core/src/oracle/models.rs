//! Built-in model families and the string registry used by experiment configs.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::profile::{Bump, Precomposed, Profile, Radial, Ridge1, Scalar, ScalarFn, Separable};
use super::RidgeOracle;
use crate::error::{invalid, Result};
use crate::labels;
use crate::linalg::{dot, lp_norm, norm2, svd, DenseMatrix};
use crate::sampling::{derive_stream, Domain, Stream};

/// Zero-based indices of the two coordinates the figure-2 model depends on.
pub const FIGURE2_ACTIVE: [usize; 2] = [2, 3];

/// Knobs shared by the randomly generated built-in models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    /// Domain margin `ε̄`.
    pub bar_eps: f64,
    /// Support size `K₀` of the random sparse rows.
    pub sparsity: usize,
    pub q: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            bar_eps: 0.5,
            sparsity: 4,
            q: 1.0,
        }
    }
}

/// Random `k × d` row-orthonormal matrix whose rows share one support of
/// size `max(sparsity, k)`.
pub fn sparse_row_orthonormal(
    k: usize,
    d: usize,
    sparsity: usize,
    stream: &mut Stream,
) -> Result<DenseMatrix> {
    let s = sparsity.max(k);
    if k == 0 || s > d {
        return invalid(format!("cannot draw {k} rows with support {s} in dimension {d}"));
    }
    let mut support = sample_indices(stream, d, s).into_vec();
    support.sort_unstable();
    loop {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
        for _ in 0..k {
            let mut v: Vec<f64> = (0..s).map(|_| StandardNormal.sample(stream)).collect();
            for r in &rows {
                let c = dot(&v, r);
                v.iter_mut().zip(r).for_each(|(vi, ri)| *vi -= c * ri);
            }
            let n = norm2(&v);
            if n < 1e-8 {
                break;
            }
            v.iter_mut().for_each(|vi| *vi /= n);
            rows.push(v);
        }
        if rows.len() < k {
            continue;
        }
        let mut a = DenseMatrix::zeros(k, d);
        for (i, r) in rows.iter().enumerate() {
            for (&j, &v) in support.iter().zip(r) {
                a[(i, j)] = v;
            }
        }
        return Ok(a);
    }
}

/// The figure-2 bump `max([1 − 5‖(x₃, x₄) − (½, ½)‖]³, 0)`, sampled on the unit cube.
pub fn make_figure2(d: usize, bar_eps: f64) -> Result<RidgeOracle> {
    if d < 4 {
        return invalid(format!("the figure-2 model needs d >= 4, got {d}"));
    }
    let mut a = DenseMatrix::zeros(2, d);
    a[(0, FIGURE2_ACTIVE[0])] = 1.0;
    a[(1, FIGURE2_ACTIVE[1])] = 1.0;
    RidgeOracle::new(a, Arc::new(Bump), 1.0, bar_eps, Domain::UnitCube)
}

/// Ridge function supported on the cap `{a·x ≥ ½}`, invisible to most sample points.
pub fn make_cap_counterexample(a: &[f64], bar_eps: f64) -> Result<RidgeOracle> {
    let n = norm2(a);
    if (n - 1.0).abs() > 1e-10 {
        return invalid(format!("cap direction must be a unit vector, got norm {n}"));
    }
    let a = DenseMatrix::new(1, a.len(), a.to_vec())?;
    RidgeOracle::new(a, Arc::new(Ridge1(Arc::new(Scalar::Cap))), 1.0, bar_eps, Domain::Ball)
}

/// `g(y) = g0(‖y‖₂)` with a random sparse row-orthonormal `A`.
pub fn make_radial(
    g0: Arc<dyn ScalarFn>,
    k: usize,
    d: usize,
    options: ModelOptions,
    seed: u64,
) -> Result<RidgeOracle> {
    let slope = g0.derivative(0.0);
    if slope.abs() > 1e-6 {
        return invalid(format!("radial profile needs g0'(0) = 0, got {slope:e}"));
    }
    let mut stream = derive_stream(seed, &labels!["model", "radial"]);
    let a = sparse_row_orthonormal(k, d, options.sparsity, &mut stream)?;
    RidgeOracle::new(a, Arc::new(Radial { g0, k }), options.q, options.bar_eps, Domain::Ball)
}

/// Rewrites `g(Ax)` for a full-rank `A = UΣVᵀ` as `g̃(Ãx)` with `Ã = Vᵀ`
/// and `g̃(y) = g(UΣy)`.
pub fn reduce_to_row_orthonormal(
    a: &DenseMatrix,
    g: Arc<dyn Profile>,
) -> Result<(DenseMatrix, Arc<dyn Profile>)> {
    let (k, d) = a.shape();
    if k == 0 || k > d {
        return invalid(format!("expected a wide k x d matrix, got {k}x{d}"));
    }
    if g.dim() != k {
        return invalid("link function dimension does not match A");
    }
    let f = svd(a)?;
    let s1 = f.sigma(1);
    if !(s1 > 0.0) || f.sigma(k) <= 1e-12 * s1 {
        return invalid("A is rank deficient");
    }
    let a_tilde = f.v.leading_columns(k).transpose();
    let b = DenseMatrix::from_fn(k, k, |i, j| f.u[(i, j)] * f.singular_values[j]);
    Ok((a_tilde, Arc::new(Precomposed { inner: g, b })))
}

/// Tractability classes of single-ridge functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionClass {
    /// `g(y) = y + y³`, so `|g'(0)| = 1`.
    F1,
    /// `g(y) = y^{M+1}/(M+1)!`, first non-vanishing derivative of order `M + 1`.
    F2(usize),
    /// `exp(−1/y²)`, flat at the origin.
    F3,
}

/// Random `k = 1` instance of a tractability class with `‖a‖_q ≤ C1`.
///
/// The support of `a` shrinks from `K₀` until the `ℓ_q` constraint holds;
/// a single spike always satisfies it since `‖a‖_q ≥ ‖a‖₂ = 1`.
pub fn make_class_instance(
    class: FunctionClass,
    d: usize,
    options: ModelOptions,
    c1: f64,
    seed: u64,
) -> Result<RidgeOracle> {
    let g = match class {
        FunctionClass::F1 => Scalar::Poly(vec![0.0, 1.0, 0.0, 1.0]),
        FunctionClass::F2(m) if m >= 1 => Scalar::scaled_power(m + 1),
        FunctionClass::F2(m) => return invalid(format!("F2 needs M >= 1, got {m}")),
        FunctionClass::F3 => Scalar::Flat,
    };
    if !(c1 >= 1.0) {
        return invalid(format!("C1 must be at least 1 for unit rows, got {c1}"));
    }
    if !(options.q > 0.0 && options.q <= 1.0) {
        return invalid(format!("q must lie in (0, 1], got {}", options.q));
    }
    let mut stream = derive_stream(seed, &labels!["model", "class"]);
    let mut support = options.sparsity.clamp(1, d.max(1));
    let a = loop {
        let a = sparse_row_orthonormal(1, d, support, &mut stream)?;
        if lp_norm(a.row(0), options.q)? <= c1 || support == 1 {
            break a;
        }
        support -= 1;
    };
    RidgeOracle::new(a, Arc::new(Ridge1(Arc::new(g))), options.q, options.bar_eps, Domain::Ball)
}

/// Named model families addressable from experiment configs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelTemplate {
    Figure2,
    Cap,
    /// `g0(r) = r²` with the given ridge dimension.
    RadialSquare { k: usize },
    Class(FunctionClass),
    /// `g(y) = y` with a random row of the given sparsity.
    LinearSparse { sparsity: usize },
    /// `sin(y₁) + y₂²`.
    SinSquare,
}

impl ModelTemplate {
    /// Ridge dimension of the generated models.
    pub fn ridge_dim(&self) -> usize {
        match self {
            ModelTemplate::Figure2 | ModelTemplate::SinSquare => 2,
            ModelTemplate::RadialSquare { k } => *k,
            _ => 1,
        }
    }

    /// Margin used when a config does not set one.
    pub fn default_bar_eps(&self) -> f64 {
        match self {
            ModelTemplate::Figure2 => 0.1,
            _ => ModelOptions::default().bar_eps,
        }
    }

    pub fn build(&self, d: usize, options: ModelOptions, seed: u64) -> Result<RidgeOracle> {
        match self {
            ModelTemplate::Figure2 => make_figure2(d, options.bar_eps),
            ModelTemplate::Cap => {
                let mut stream = derive_stream(seed, &labels!["model", "cap"]);
                let a = sparse_row_orthonormal(1, d, options.sparsity, &mut stream)?;
                make_cap_counterexample(a.row(0), options.bar_eps)
            }
            ModelTemplate::RadialSquare { k } => make_radial(
                Arc::new(Scalar::Poly(vec![0.0, 0.0, 1.0])),
                *k,
                d,
                options,
                seed,
            ),
            ModelTemplate::Class(c) => make_class_instance(*c, d, options, f64::INFINITY, seed),
            ModelTemplate::LinearSparse { sparsity } => {
                let mut stream = derive_stream(seed, &labels!["model", "linear"]);
                let a = sparse_row_orthonormal(1, d, *sparsity, &mut stream)?;
                let g: Arc<dyn Profile> = Arc::new(Ridge1(Arc::new(Scalar::identity())));
                RidgeOracle::new(a, g, options.q, options.bar_eps, Domain::Ball)
            }
            ModelTemplate::SinSquare => {
                let mut stream = derive_stream(seed, &labels!["model", "sin-sq"]);
                let a = sparse_row_orthonormal(2, d, options.sparsity, &mut stream)?;
                let g: Arc<dyn Profile> = Arc::new(Separable(vec![
                    Arc::new(Scalar::Sin),
                    Arc::new(Scalar::Poly(vec![0.0, 0.0, 1.0])),
                ]));
                RidgeOracle::new(a, g, options.q, options.bar_eps, Domain::Ball)
            }
        }
    }
}

impl FromStr for ModelTemplate {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || crate::Error::InvalidArgument(format!("unknown model '{s}'"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: &str| a.parse::<usize>().map_err(|_| bad());
        Ok(match (head, arg) {
            ("figure2", None) => ModelTemplate::Figure2,
            ("cap", None) => ModelTemplate::Cap,
            ("radial", Some("r2")) => ModelTemplate::RadialSquare { k: 2 },
            ("radial", Some(a)) => match a.split_once(':') {
                Some(("r2", k)) if num(k)? >= 1 => ModelTemplate::RadialSquare { k: num(k)? },
                _ => return Err(bad()),
            },
            ("f1", None) => ModelTemplate::Class(FunctionClass::F1),
            ("f2", Some(m)) if num(m)? >= 1 => ModelTemplate::Class(FunctionClass::F2(num(m)?)),
            ("f3", None) => ModelTemplate::Class(FunctionClass::F3),
            ("linear", Some(a)) => match a.strip_prefix("sparse") {
                Some(n) if num(n)? >= 1 => ModelTemplate::LinearSparse { sparsity: num(n)? },
                _ => return Err(bad()),
            },
            ("sin-sq", None) => ModelTemplate::SinSquare,
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for ModelTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelTemplate::Figure2 => write!(f, "figure2"),
            ModelTemplate::Cap => write!(f, "cap"),
            ModelTemplate::RadialSquare { k: 2 } => write!(f, "radial:r2"),
            ModelTemplate::RadialSquare { k } => write!(f, "radial:r2:{k}"),
            ModelTemplate::Class(FunctionClass::F1) => write!(f, "f1"),
            ModelTemplate::Class(FunctionClass::F2(m)) => write!(f, "f2:{m}"),
            ModelTemplate::Class(FunctionClass::F3) => write!(f, "f3"),
            ModelTemplate::LinearSparse { sparsity } => write!(f, "linear:sparse{sparsity}"),
            ModelTemplate::SinSquare => write!(f, "sin-sq"),
        }
    }
}

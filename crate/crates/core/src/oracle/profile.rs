//! Link functions `g : R^k → R` and the scalar building blocks they are made of.

use std::fmt;
use std::sync::Arc;

use crate::linalg::{norm2, DenseMatrix};

/// A smooth scalar function of one variable.
pub trait ScalarFn: Send + Sync + fmt::Debug {
    fn value(&self, t: f64) -> f64;

    fn derivative(&self, t: f64) -> f64 {
        let h = 1e-6 * (1.0 + t.abs());
        (self.value(t + h) - self.value(t - h)) / (2.0 * h)
    }

    fn second_derivative(&self, t: f64) -> f64 {
        let h = 1e-4 * (1.0 + t.abs());
        (self.value(t + h) - 2.0 * self.value(t) + self.value(t - h)) / (h * h)
    }
}

/// Closed-form scalar functions used by the built-in models.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    /// `Σ c_i t^i`.
    Poly(Vec<f64>),
    Sin,
    /// `8(t − 1/2)^3` for `t ≥ 1/2`, zero below.
    Cap,
    /// `exp(−1/t²)`, extended by zero at the origin; every derivative vanishes there.
    Flat,
}

impl Scalar {
    pub fn identity() -> Self {
        Scalar::Poly(vec![0.0, 1.0])
    }

    /// `t^n / n!`.
    pub fn scaled_power(n: usize) -> Self {
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0 / fact;
        Scalar::Poly(c)
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ci| acc * t + ci)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, ci)| ci * i as f64)
        .collect()
}

impl ScalarFn for Scalar {
    fn value(&self, t: f64) -> f64 {
        match self {
            Scalar::Poly(c) => horner(c, t),
            Scalar::Sin => t.sin(),
            Scalar::Cap => {
                if t >= 0.5 {
                    8.0 * (t - 0.5).powi(3)
                } else {
                    0.0
                }
            }
            Scalar::Flat => {
                if t == 0.0 {
                    0.0
                } else {
                    (-1.0 / (t * t)).exp()
                }
            }
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        match self {
            Scalar::Poly(c) => horner(&poly_derivative(c), t),
            Scalar::Sin => t.cos(),
            Scalar::Cap => {
                if t >= 0.5 {
                    24.0 * (t - 0.5).powi(2)
                } else {
                    0.0
                }
            }
            Scalar::Flat => {
                if t == 0.0 {
                    0.0
                } else {
                    2.0 / t.powi(3) * (-1.0 / (t * t)).exp()
                }
            }
        }
    }

    fn second_derivative(&self, t: f64) -> f64 {
        match self {
            Scalar::Poly(c) => horner(&poly_derivative(&poly_derivative(c)), t),
            Scalar::Sin => -t.sin(),
            Scalar::Cap => {
                if t >= 0.5 {
                    48.0 * (t - 0.5)
                } else {
                    0.0
                }
            }
            Scalar::Flat => {
                if t == 0.0 {
                    0.0
                } else {
                    (4.0 / t.powi(6) - 6.0 / t.powi(4)) * (-1.0 / (t * t)).exp()
                }
            }
        }
    }
}

/// Wraps a closure (and optionally its derivative) as a [`ScalarFn`].
pub struct FnScalar<F> {
    f: F,
    df: Option<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FnScalar<F> {
    pub fn new(f: F) -> Self {
        Self { f, df: None }
    }

    pub fn with_derivative(f: F, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f,
            df: Some(Box::new(df)),
        }
    }
}

impl<F> fmt::Debug for FnScalar<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnScalar")
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> ScalarFn for FnScalar<F> {
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        match &self.df {
            Some(df) => df(t),
            None => {
                let h = 1e-6 * (1.0 + t.abs());
                ((self.f)(t + h) - (self.f)(t - h)) / (2.0 * h)
            }
        }
    }
}

/// The link function `g` of a ridge model.
pub trait Profile: Send + Sync + fmt::Debug {
    /// Ridge dimension `k`.
    fn dim(&self) -> usize;

    fn value(&self, y: &[f64]) -> f64;

    /// `∇g(y)`; central differences unless overridden.
    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut p = y.to_vec();
        (0..y.len())
            .map(|i| {
                let h = 1e-6 * (1.0 + y[i].abs());
                p[i] = y[i] + h;
                let up = self.value(&p);
                p[i] = y[i] - h;
                let down = self.value(&p);
                p[i] = y[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }
}

/// `g(y) = h(y_1)` for `k = 1`.
#[derive(Debug, Clone)]
pub struct Ridge1(pub Arc<dyn ScalarFn>);

impl Profile for Ridge1 {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.0.value(y[0])
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        vec![self.0.derivative(y[0])]
    }
}

/// `g(y) = Σ_i h_i(y_i)`.
#[derive(Debug, Clone)]
pub struct Separable(pub Vec<Arc<dyn ScalarFn>>);

impl Profile for Separable {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.0.iter().zip(y).map(|(h, t)| h.value(*t)).sum()
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        self.0.iter().zip(y).map(|(h, t)| h.derivative(*t)).collect()
    }
}

/// `g(y) = g0(‖y‖₂)`.
#[derive(Debug, Clone)]
pub struct Radial {
    pub g0: Arc<dyn ScalarFn>,
    pub k: usize,
}

impl Profile for Radial {
    fn dim(&self) -> usize {
        self.k
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.g0.value(norm2(y))
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let r = norm2(y);
        if r == 0.0 {
            return vec![0.0; y.len()];
        }
        let s = self.g0.derivative(r) / r;
        y.iter().map(|v| v * s).collect()
    }
}

/// `max([1 − 5‖y − (1/2, 1/2)‖]^3, 0)` on `R^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bump;

impl Profile for Bump {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, y: &[f64]) -> f64 {
        let r = ((y[0] - 0.5).powi(2) + (y[1] - 0.5).powi(2)).sqrt();
        (1.0 - 5.0 * r).powi(3).max(0.0)
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let (u, v) = (y[0] - 0.5, y[1] - 0.5);
        let r = (u * u + v * v).sqrt();
        if r == 0.0 || r >= 0.2 {
            return vec![0.0, 0.0];
        }
        let s = -15.0 * (1.0 - 5.0 * r).powi(2) / r;
        vec![s * u, s * v]
    }
}

/// `g̃(y) = g(B y)` for a square matrix `B`.
#[derive(Debug, Clone)]
pub struct Precomposed {
    pub inner: Arc<dyn Profile>,
    pub b: DenseMatrix,
}

impl Profile for Precomposed {
    fn dim(&self) -> usize {
        self.b.cols()
    }

    fn value(&self, y: &[f64]) -> f64 {
        self.inner.value(&self.b.matvec(y))
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let g = self.inner.gradient(&self.b.matvec(y));
        self.b.t_matvec(&g)
    }
}

/// Region of `R^k` over which derivative bounds are spot-checked.
#[derive(Clone, Debug)]
pub enum ProbeRegion {
    Ball { radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

/// Number of probe points per axis for `k ≤ 2`.
pub const PROBE_GRID: usize = 513;
const PROBE_RANDOM: usize = 20_000;

/// Sampled `max(|g|, |∂_i g|, |∂_i ∂_j g|)` over a probe set.
///
/// For `k ≤ 2` the probes form a regular grid with [`PROBE_GRID`] points per
/// axis; beyond that a fixed pseudo-random cloud is used. Second derivatives
/// are central differences of the gradient. This is a spot check, not a bound.
pub fn sampled_derivative_bound(profile: &dyn Profile, region: &ProbeRegion) -> f64 {
    let k = profile.dim();
    let (lo, hi) = match region {
        ProbeRegion::Ball { radius } => (vec![-radius; k], vec![*radius; k]),
        ProbeRegion::Box { lo, hi } => (lo.clone(), hi.clone()),
    };
    let inside = |y: &[f64]| match region {
        ProbeRegion::Ball { radius } => norm2(y) <= *radius + 1e-12,
        ProbeRegion::Box { .. } => true,
    };
    let mut best = 0.0f64;
    let mut visit = |y: &[f64]| {
        if !inside(y) {
            return;
        }
        best = best.max(profile.value(y).abs());
        let g = profile.gradient(y);
        best = g.iter().fold(best, |m, v| m.max(v.abs()));
        let mut p = y.to_vec();
        for i in 0..k {
            let h = 1e-5;
            p[i] = y[i] + h;
            let up = profile.gradient(&p);
            p[i] = y[i] - h;
            let down = profile.gradient(&p);
            p[i] = y[i];
            for j in 0..k {
                best = best.max(((up[j] - down[j]) / (2.0 * h)).abs());
            }
        }
    };
    let axis = |i: usize, t: usize| lo[i] + (hi[i] - lo[i]) * t as f64 / (PROBE_GRID - 1) as f64;
    match k {
        1 => {
            for t in 0..PROBE_GRID {
                visit(&[axis(0, t)]);
            }
        }
        2 => {
            for s in 0..PROBE_GRID {
                for t in 0..PROBE_GRID {
                    visit(&[axis(0, s), axis(1, t)]);
                }
            }
        }
        _ => {
            // Weyl sequence: deterministic and well spread.
            let alphas: Vec<f64> = (0..k).map(|i| ((i + 2) as f64).sqrt().fract()).collect();
            for n in 1..=PROBE_RANDOM {
                let y: Vec<f64> = (0..k)
                    .map(|i| {
                        let u = (n as f64 * alphas[i]).fract();
                        lo[i] + (hi[i] - lo[i]) * u
                    })
                    .collect();
                visit(&y);
            }
        }
    }
    best
}

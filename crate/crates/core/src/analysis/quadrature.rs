//! Gauss–Legendre quadrature with cached nodes and node doubling.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest node count accepted by [`QuadratureSpec`].
pub const MIN_NODES: usize = 16;

/// How a one-dimensional integral is discretized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Initial number of Gauss–Legendre nodes.
    pub node_count: usize,
    /// Node counts double until two successive estimates agree to `rel_tol`.
    pub adaptive: bool,
    pub rel_tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 256,
            adaptive: true,
            rel_tol: 1e-10,
            max_nodes: 4096,
        }
    }
}

impl QuadratureSpec {
    /// A single rule with exactly `n` nodes.
    pub fn fixed(n: usize) -> Self {
        Self {
            node_count: n,
            adaptive: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < MIN_NODES {
            return invalid(format!("quadrature needs at least {MIN_NODES} nodes"));
        }
        if self.adaptive && !(self.rel_tol > 0.0) {
            return invalid("rel_tol must be positive");
        }
        Ok(())
    }

    /// `∫_lo^hi f`.
    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.validate()?;
        let mut n = self.node_count;
        let mut prev = rule(n, lo, hi, &f);
        if !prev.is_finite() {
            return Err(Error::NumericalFailure(format!("non-finite quadrature with {n} nodes")));
        }
        if !self.adaptive {
            return Ok(prev);
        }
        while n * 2 <= self.max_nodes.max(self.node_count) {
            n *= 2;
            let next = rule(n, lo, hi, &f);
            if !next.is_finite() {
                return Err(Error::NumericalFailure(format!("non-finite quadrature with {n} nodes")));
            }
            let done = (next - prev).abs() <= self.rel_tol * next.abs();
            prev = next;
            if done {
                break;
            }
        }
        Ok(prev)
    }
}

fn rule(n: usize, lo: f64, hi: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let gl = gauss_legendre(n);
    let (half, mid) = (0.5 * (hi - lo), 0.5 * (hi + lo));
    let s: f64 = gl.0.iter().zip(&gl.1).map(|(x, w)| w * f(mid + half * x)).sum();
    half * s
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("cache lock").get(&n) {
        return r.clone();
    }
    let r: Rule = Arc::new(compute_rule(n));
    cache.lock().expect("cache lock").insert(n, r.clone());
    r
}

fn compute_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(z) and its derivative by the three-term recurrence
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

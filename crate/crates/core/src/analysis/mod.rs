//! Closed forms, quadratures and Monte-Carlo checks for the quantities that
//! govern sample complexity: push-forward densities of the sphere measure,
//! their moments, the conditioning constant `α`, concentration estimates,
//! error levels `ν₁, ν₂` and success probabilities.
//!
//! Every Gamma ratio is evaluated as a difference of log-Gamma values, since
//! `Γ(d/2)` overflows a double near `d ≈ 340`.

mod montecarlo;
mod quadrature;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};

pub use montecarlo::{
    estimate_gradient_outer, verify_hoeffding_max, verify_matrix_chernoff, ChernoffReport,
    DeterministicSampler,
    GradientSampler, HoeffdingReport, PsdSampler, RankOneSampler, TailCheck,
};
pub use quadrature::{gauss_legendre, QuadratureSpec, MIN_NODES};

// weights below e^{-TAIL_EXP} of their peak are dropped from the integration range
const TAIL_EXP: f64 = 70.0;

/// Constants entering the error and probability bounds. The absolute
/// constants `C`, `C'`, `c₁'` are unknown; the defaults of 1 give the shape
/// of each bound with unit constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundParams {
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub s: f64,
    /// Constant of the single-direction error level.
    pub c_prime: f64,
    /// Constant of the `k`-dimensional error level.
    pub c: f64,
    /// Exponent constant of the RIP failure probability.
    pub c1_prime: f64,
    pub delta: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            q: 1.0,
            c1: 1.0,
            c2: 1.0,
            alpha: 1.0,
            s: 0.5,
            c_prime: 1.0,
            c: 1.0,
            c1_prime: 1.0,
            delta: 0.5,
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return invalid(format!("q must lie in (0, 1], got {}", self.q));
        }
        for (name, v) in [
            ("C1", self.c1),
            ("C2", self.c2),
            ("alpha", self.alpha),
            ("C'", self.c_prime),
            ("C", self.c),
            ("c1'", self.c1_prime),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("s", self.s), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return invalid(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        Ok(())
    }
}

fn check_dims(k: usize, d: usize) -> Result<()> {
    if k == 0 || k >= d {
        return invalid(format!("need 1 <= k < d, got k = {k}, d = {d}"));
    }
    Ok(())
}

/// `ln[Γ(d/2) / (π^{k/2} Γ((d−k)/2))]`.
fn ln_density_const(k: usize, d: usize) -> f64 {
    ln_gamma(d as f64 / 2.0) - 0.5 * k as f64 * PI.ln() - ln_gamma((d - k) as f64 / 2.0)
}

/// `ln[2Γ(d/2) / (Γ(k/2) Γ((d−k)/2))]`, the density constant times the area of `S^{k−1}`.
fn ln_radial_const(k: usize, d: usize) -> f64 {
    2f64.ln() + ln_gamma(d as f64 / 2.0) - ln_gamma(k as f64 / 2.0) - ln_gamma((d - k) as f64 / 2.0)
}

/// Density of the image of the uniform measure on `S^{d−1}` under a
/// row-orthonormal `k × d` map, at `y ∈ R^k`.
pub fn pushforward_density(k: usize, d: usize, y: &[f64]) -> Result<f64> {
    check_dims(k, d)?;
    if y.len() != k {
        return invalid(format!("point must have {k} coordinates"));
    }
    let r2: f64 = y.iter().map(|v| v * v).sum();
    if r2 > 1.0 {
        return invalid("point lies outside the unit ball");
    }
    if r2 == 1.0 {
        return Ok(0.0);
    }
    let p = (d as f64 - 2.0 - k as f64) / 2.0;
    Ok((ln_density_const(k, d) + p * (1.0 - r2).ln()).exp())
}

/// `∫ y^ℓ dμ₁(y) = [1 + (−1)^ℓ] Γ(d/2) Γ((1+ℓ)/2) / (2√π Γ((d+ℓ)/2))`.
pub fn moment(ell: u32, d: usize) -> Result<f64> {
    if d < 2 {
        return invalid("moments need d >= 2");
    }
    if ell % 2 == 1 {
        return Ok(0.0);
    }
    let (l, d) = (ell as f64, d as f64);
    Ok((ln_gamma(d / 2.0) + ln_gamma((1.0 + l) / 2.0) - 0.5 * PI.ln() - ln_gamma((d + l) / 2.0)).exp())
}

/// Truncation point of a weight `(1−y²)^p y^{k−1}`, beyond which it is negligible.
fn support_edge(p: f64, k: usize) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    ((TAIL_EXP + 2.0 * k as f64) / p).sqrt().min(1.0)
}

/// `∫_{−1}^{1} h(y)(1−y²)^p dy` via `y = sin θ`, which turns the endpoint
/// singularity into the smooth factor `cos^{2p+1}θ`.
fn sphere_weighted(h: &dyn Fn(f64) -> f64, p: f64, quad: &QuadratureSpec) -> Result<f64> {
    let edge = support_edge(p, 1).asin();
    let e = 2.0 * p + 1.0;
    quad.integrate(-edge, edge, |t| {
        let c = t.cos();
        let w = if e == 0.0 { 1.0 } else { c.powf(e) };
        h(t.sin()) * w
    })
}

/// `∫_0^1 h(r)(1−r²)^p r^{k−1} dr` via `r = sin θ`.
fn radial_weighted(h: &dyn Fn(f64) -> f64, k: usize, p: f64, quad: &QuadratureSpec) -> Result<f64> {
    let edge = support_edge(p, k).asin();
    let e = 2.0 * p + 1.0;
    quad.integrate(0.0, edge, |t| {
        let (s, c) = t.sin_cos();
        let w = if e == 0.0 { 1.0 } else { c.powf(e) };
        h(s) * w * s.powi(k as i32 - 1)
    })
}

/// `E_{μ₁}[h] = ∫_{−1}^{1} h(y) dμ₁(y)` by quadrature.
pub fn pushforward_expectation(d: usize, h: &dyn Fn(f64) -> f64, quad: &QuadratureSpec) -> Result<f64> {
    check_dims(1, d)?;
    let p = (d as f64 - 3.0) / 2.0;
    Ok(ln_density_const(1, d).exp() * sphere_weighted(h, p, quad)?)
}

/// `α = ∫_{S^{d−1}} |g'(a·x)|² dμ(x)` for a single ridge direction.
pub fn alpha_k1(gprime: &dyn Fn(f64) -> f64, d: usize, quad: &QuadratureSpec) -> Result<f64> {
    pushforward_expectation(d, &|y| gprime(y).powi(2), quad)
}

/// `α(k, d)` of the radial profile `g(y) = g₀(‖y‖)`, for which `H_g = α(k, d) I_k`.
pub fn alpha_radial(g0prime: &dyn Fn(f64) -> f64, k: usize, d: usize, quad: &QuadratureSpec) -> Result<f64> {
    check_dims(k, d)?;
    let p = (d as f64 - 2.0 - k as f64) / 2.0;
    let integral = radial_weighted(&|r| g0prime(r).powi(2), k, p, quad)?;
    Ok((ln_radial_const(k, d) - (k as f64).ln()).exp() * integral)
}

/// `1 − 2Γ(d/2)/(Γ(k/2)Γ((d−k)/2)) · e^{−(d−2−k)ε²/2}`, clamped to `[0, 1]`.
pub fn concentration_lower_bound(k: usize, d: usize, eps: f64) -> Result<f64> {
    check_dims(k, d)?;
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0, 1), got {eps}"));
    }
    let ln_tail = ln_radial_const(k, d) - (d as f64 - 2.0 - k as f64) * eps * eps / 2.0;
    Ok((1.0 - ln_tail.exp()).clamp(0.0, 1.0))
}

/// Exact `μ_k(B(ε))`, the regularized incomplete Beta function `I_{ε²}(k/2, (d−k)/2)`.
pub fn concentration_exact(k: usize, d: usize, eps: f64) -> Result<f64> {
    check_dims(k, d)?;
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0, 1), got {eps}"));
    }
    Ok(beta_reg(k as f64 / 2.0, (d - k) as f64 / 2.0, eps * eps))
}

/// `μ_k(B(ε))` by radial quadrature of the push-forward density.
pub fn concentration_quadrature(k: usize, d: usize, eps: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_dims(k, d)?;
    let p = (d as f64 - 2.0 - k as f64) / 2.0;
    let e = 2.0 * p + 1.0;
    let km1 = k as i32 - 1;
    let integral = quad.integrate(0.0, eps.asin(), |t| {
        let (s, c) = t.sin_cos();
        let w = if e == 0.0 { 1.0 } else { c.powf(e) };
        w * s.powi(km1)
    })?;
    Ok(ln_radial_const(k, d).exp() * integral)
}

fn sparsity_term(m_phi: usize, d: usize, q: f64) -> Result<f64> {
    if m_phi == 0 || m_phi >= d {
        return invalid(format!("need 0 < m_phi < d, got m_phi = {m_phi}, d = {d}"));
    }
    let m = m_phi as f64;
    Ok((m / (d as f64 / m).ln()).powf(0.5 - 1.0 / q))
}

/// `ν₁ = C'([m/ln(d/m)]^{1/2−1/q} + ε/√m)`.
pub fn nu1(m_phi: usize, d: usize, epsilon: f64, params: &BoundParams) -> Result<f64> {
    let t = sparsity_term(m_phi, d, params.q)?;
    Ok(params.c_prime * (t + epsilon / (m_phi as f64).sqrt()))
}

/// `ν₂ = C(k^{1/q}[m/ln(d/m)]^{1/2−1/q} + εk²/√m)`.
pub fn nu2(m_phi: usize, d: usize, epsilon: f64, k: usize, params: &BoundParams) -> Result<f64> {
    let t = sparsity_term(m_phi, d, params.q)?;
    let kf = k as f64;
    Ok(params.c * (kf.powf(1.0 / params.q) * t + epsilon * kf * kf / (m_phi as f64).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCase {
    K1,
    KGeq1,
}

/// Lower bound on the probability that recovery succeeds, clamped to `[0, 1]`.
pub fn success_probability(
    case: BoundCase,
    m_phi: usize,
    m_x: usize,
    d: usize,
    k: usize,
    params: &BoundParams,
) -> Result<f64> {
    params.validate()?;
    let (m, mx, kf) = (m_phi as f64, m_x as f64, k as f64);
    let (s, a, c2) = (params.s, params.alpha, params.c2);
    let rip = (-params.c1_prime * m).exp() + (-(m * d as f64).sqrt()).exp();
    let sampling = match case {
        BoundCase::K1 => 2.0 * (-2.0 * mx * s * s * a * a / c2.powi(4)).exp(),
        BoundCase::KGeq1 => kf * (-mx * a * s * s / (2.0 * kf * c2 * c2)).exp(),
    };
    Ok((1.0 - (rip + sampling)).clamp(0.0, 1.0))
}

/// Least-squares slope of `ln α` against `ln d`.
pub fn decay_exponent(values: &[(f64, f64)]) -> Result<f64> {
    if values.len() < 4 {
        return invalid("need at least four points");
    }
    if values.windows(2).any(|w| w[1].0 <= w[0].0) || values[0].0 <= 0.0 {
        return invalid("d values must be positive and increasing");
    }
    if values.iter().any(|&(_, a)| !(a > 0.0)) {
        return invalid("alpha values must be positive");
    }
    let n = values.len() as f64;
    let xs: Vec<f64> = values.iter().map(|v| v.0.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

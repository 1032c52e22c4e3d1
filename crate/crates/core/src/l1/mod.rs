//! The ℓ1 decoder: `min ‖z‖₁` subject to `‖Φz − y‖₂ ≤ η`.
//!
//! Solutions are computed by the homotopy (LASSO path) method. The path of
//! minimizers of `λ‖z‖₁ + ½‖Φz − y‖²` is piecewise linear in `λ`; following it
//! from `λ = ‖Φᵀy‖_∞` down to the point where the residual reaches `η` (or to
//! `λ = 0` in the equality case) gives the exact constrained minimizer. Each
//! breakpoint costs two products with `Φ` plus a rank-one update of a Cholesky
//! factor, and sparse solutions are reached after roughly as many breakpoints
//! as they have non-zeros.

mod factor;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{best_k_term, dot, norm2, Cholesky, DenseMatrix};
use factor::GramFactor;

/// Relative residual used in place of exact equality constraints.
pub const EQUALITY_TOL: f64 = 1e-10;

// the path is considered finished once λ falls below this fraction of its start
const LAMBDA_FLOOR: f64 = 1e-11;

// relative size below which path coefficients are treated as round-off
const PRUNE_REL: f64 = 1e-6;

// refresh the running correlations from scratch this often
const REFRESH_EVERY: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSettings {
    /// Constraint radius `η`; zero requests equality.
    pub residual_tol: f64,
    /// Feasibility slack accepted on top of `η`.
    pub opt_tol: f64,
    /// Cap on the number of path breakpoints.
    pub max_iters: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            residual_tol: 0.0,
            opt_tol: 1e-9,
            max_iters: 20_000,
        }
    }
}

impl SolveSettings {
    pub fn with_residual_tol(residual_tol: f64) -> Self {
        Self {
            residual_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol >= 0.0 && self.residual_tol.is_finite()) {
            return invalid("residual_tol must be finite and non-negative");
        }
        if !(self.opt_tol > 0.0 && self.opt_tol.is_finite()) {
            return invalid("opt_tol must be positive");
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        Ok(())
    }

    /// Constraint radius actually enforced for data `y`.
    pub fn effective_tol(&self, y_norm: f64) -> f64 {
        self.residual_tol.max(EQUALITY_TOL * y_norm.max(1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Feasible to tolerance and ℓ1-minimal.
    Optimal,
    /// The path reached `λ = 0` without meeting the constraint: `y` is not in the
    /// range of `Φ` and the solution is the least-ℓ1 least-squares point.
    Relaxed,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    pub l1_value: f64,
    pub converged: bool,
    pub status: SolveStatus,
}

/// Basis-pursuit solver bound to one measurement matrix.
#[derive(Clone, Debug)]
pub struct L1Decoder {
    phi: DenseMatrix,
    // Φᵀ, so that columns of Φ are contiguous
    phi_t: DenseMatrix,
    col_sq: Vec<f64>,
}

impl L1Decoder {
    pub fn new(phi: &DenseMatrix) -> Self {
        let phi_t = phi.transpose();
        let col_sq = (0..phi_t.rows()).map(|j| dot(phi_t.row(j), phi_t.row(j))).collect();
        Self {
            phi: phi.clone(),
            phi_t,
            col_sq,
        }
    }

    pub fn measurements(&self) -> usize {
        self.phi.rows()
    }

    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    pub fn solve(&self, y: &[f64], settings: &SolveSettings) -> Result<SolveReport> {
        settings.validate()?;
        let (m, d) = self.phi.shape();
        if y.len() != m {
            return invalid(format!("expected {m} measurements, got {}", y.len()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return invalid("measurements must be finite");
        }
        let y_norm = norm2(y);
        let eta = settings.effective_tol(y_norm);
        if y_norm <= eta {
            return Ok(self.report(vec![0.0; d], y, 0, SolveStatus::Optimal, settings));
        }
        // stop at the η-crossing only when a genuine tolerance was requested
        let stop_at_eta = settings.residual_tol > 0.0;

        let mut path = Path::new(self, y);
        let mut steps = 0;
        let status = loop {
            if steps >= settings.max_iters {
                break SolveStatus::IterationLimit;
            }
            steps += 1;
            match path.step(if stop_at_eta { Some(settings.residual_tol) } else { None }) {
                Step::Continue => {}
                Step::Done => break SolveStatus::Optimal,
            }
        };
        if status == SolveStatus::Optimal && !stop_at_eta {
            path.polish();
        }
        let mut x = path.solution(d);
        if status == SolveStatus::Optimal && !stop_at_eta {
            if let Some(p) = self.prune(&x, y, eta) {
                x = p;
            }
        }
        let mut report = self.report(x, y, steps, status, settings);
        if report.status == SolveStatus::Optimal && report.final_residual > eta + settings.opt_tol {
            report.status = SolveStatus::Relaxed;
            report.converged = false;
        }
        Ok(report)
    }

    /// Re-fits on the entries above [`PRUNE_REL`] of the largest one. The
    /// result replaces `x` only if it stays feasible and its ℓ1 norm does not
    /// grow, which removes round-off debris left by the path.
    fn prune(&self, x: &[f64], y: &[f64], eta: f64) -> Option<Vec<f64>> {
        let top = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let support: Vec<usize> = (0..x.len()).filter(|&j| x[j].abs() > PRUNE_REL * top).collect();
        if support.is_empty() || support.len() == x.iter().filter(|v| **v != 0.0).count() {
            return None;
        }
        let gram = DenseMatrix::from_fn(support.len(), support.len(), |a, b| {
            dot(self.phi_t.row(support[a]), self.phi_t.row(support[b]))
        });
        let chol = Cholesky::factor(&gram)?;
        let mut coef: Vec<f64> = support.iter().map(|&j| dot(self.phi_t.row(j), y)).collect();
        chol.solve_in_place(&mut coef);
        let mut z = vec![0.0; x.len()];
        for (&j, &c) in support.iter().zip(&coef) {
            z[j] = c;
        }
        let res = norm2(&self.phi.matvec(&z).iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
        let l1 = |v: &[f64]| v.iter().map(|a| a.abs()).sum::<f64>();
        (res <= eta && l1(&z) <= l1(x) * (1.0 + 1e-12)).then_some(z)
    }

    fn report(
        &self,
        x: Vec<f64>,
        y: &[f64],
        iterations: usize,
        status: SolveStatus,
        settings: &SolveSettings,
    ) -> SolveReport {
        let r: Vec<f64> = self.phi.matvec(&x).iter().zip(y).map(|(a, b)| a - b).collect();
        let final_residual = norm2(&r);
        let eta = settings.effective_tol(norm2(y));
        let converged = status == SolveStatus::Optimal && final_residual <= eta + settings.opt_tol;
        SolveReport {
            l1_value: x.iter().map(|v| v.abs()).sum(),
            solution: x,
            iterations,
            final_residual,
            converged,
            status,
        }
    }
}

enum Step {
    Continue,
    Done,
}

enum Event {
    End,
    Eta,
    Leave(usize),
    Enter(usize),
}

/// State of the homotopy: active set, signs, coefficients and correlations.
struct Path<'a> {
    dec: &'a L1Decoder,
    y: &'a [f64],
    lambda: f64,
    lambda_floor: f64,
    active: Vec<usize>,
    signs: Vec<f64>,
    coef: Vec<f64>,
    in_active: Vec<bool>,
    blocked: Vec<bool>,
    /// Column that just left and its sign; it may not re-enter with that sign next step.
    last_removed: Option<(usize, f64)>,
    factor: GramFactor,
    residual: Vec<f64>,
    corr: Vec<f64>,
    since_refresh: usize,
}

impl<'a> Path<'a> {
    fn new(dec: &'a L1Decoder, y: &'a [f64]) -> Self {
        let d = dec.dim();
        let corr = dec.phi.t_matvec(y);
        let mut p = Self {
            dec,
            y,
            lambda: 0.0,
            lambda_floor: 0.0,
            active: Vec::new(),
            signs: Vec::new(),
            coef: Vec::new(),
            in_active: vec![false; d],
            blocked: vec![false; d],
            last_removed: None,
            factor: GramFactor::default(),
            residual: y.to_vec(),
            corr,
            since_refresh: 0,
        };
        let (j, c) = p
            .corr
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, &c)| if c.abs() > best.1 { (j, c.abs()) } else { best });
        p.lambda = c;
        p.lambda_floor = LAMBDA_FLOOR * c;
        if c > 0.0 {
            p.add(j);
        }
        p
    }

    fn add(&mut self, j: usize) -> bool {
        let col = self.dec.phi_t.row(j);
        let g: Vec<f64> = self.active.iter().map(|&i| dot(self.dec.phi_t.row(i), col)).collect();
        if !self.factor.push(&g, self.dec.col_sq[j]) {
            self.blocked[j] = true;
            return false;
        }
        self.active.push(j);
        self.signs.push(self.corr[j].signum());
        self.coef.push(0.0);
        self.in_active[j] = true;
        true
    }

    fn remove(&mut self, p: usize) {
        let j = self.active.remove(p);
        let sign = self.signs.remove(p);
        self.coef.remove(p);
        self.factor.remove(p);
        self.in_active[j] = false;
        self.last_removed = Some((j, sign));
    }

    fn refresh(&mut self) {
        let m = self.y.len();
        let mut r = self.y.to_vec();
        for (&j, &c) in self.active.iter().zip(&self.coef) {
            let col = self.dec.phi_t.row(j);
            for i in 0..m {
                r[i] -= c * col[i];
            }
        }
        self.corr = self.dec.phi.t_matvec(&r);
        self.residual = r;
        self.since_refresh = 0;
    }

    fn step(&mut self, eta: Option<f64>) -> Step {
        if self.active.is_empty() || self.lambda <= 0.0 {
            return Step::Done;
        }
        let m = self.y.len();
        // direction of the active coefficients as λ decreases
        let mut dir = self.signs.clone();
        self.factor.solve(&mut dir);
        let mut u = vec![0.0; m];
        for (&j, &dj) in self.active.iter().zip(&dir) {
            let col = self.dec.phi_t.row(j);
            for i in 0..m {
                u[i] += dj * col[i];
            }
        }
        let a = self.dec.phi.t_matvec(&u);

        let mut gamma = self.lambda;
        let mut event = Event::End;
        if let Some(eta) = eta {
            // ‖r − γu‖² = η²
            let (uu, ru, rr) = (dot(&u, &u), dot(&self.residual, &u), dot(&self.residual, &self.residual));
            let c = rr - eta * eta;
            if c <= 0.0 {
                return Step::Done;
            }
            let disc = ru * ru - uu * c;
            if uu > 0.0 && disc >= 0.0 {
                let g = c / (ru + disc.sqrt());
                if g >= 0.0 && g < gamma {
                    gamma = g;
                    event = Event::Eta;
                }
            }
        }
        for (p, (&x, &dx)) in self.coef.iter().zip(&dir).enumerate() {
            if x != 0.0 && x * dx < 0.0 {
                let g = -x / dx;
                if g < gamma {
                    gamma = g;
                    event = Event::Leave(p);
                }
            }
        }
        for j in 0..self.corr.len() {
            if self.in_active[j] || self.blocked[j] {
                continue;
            }
            let excluded = match self.last_removed {
                Some((i, sign)) if i == j => sign,
                _ => 0.0,
            };
            let (c, aj) = (self.corr[j], a[j]);
            for (sign, num, den) in [(1.0, self.lambda - c, 1.0 - aj), (-1.0, self.lambda + c, 1.0 + aj)] {
                if den > 1e-12 && sign != excluded {
                    let g = num.max(0.0) / den;
                    if g < gamma {
                        gamma = g;
                        event = Event::Enter(j);
                    }
                }
            }
        }

        for (x, dx) in self.coef.iter_mut().zip(&dir) {
            *x += gamma * dx;
        }
        for (r, ui) in self.residual.iter_mut().zip(&u) {
            *r -= gamma * ui;
        }
        for (c, ai) in self.corr.iter_mut().zip(&a) {
            *c -= gamma * ai;
        }
        self.lambda -= gamma;
        if self.lambda <= self.lambda_floor {
            event = Event::End;
        }
        self.last_removed = None;
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            self.refresh();
        }

        match event {
            Event::End | Event::Eta => {
                if let Event::End = event {
                    self.lambda = 0.0;
                }
                Step::Done
            }
            Event::Leave(p) => {
                self.coef[p] = 0.0;
                self.remove(p);
                if self.active.is_empty() {
                    self.refresh();
                    let (j, c) = self.corr.iter().enumerate().fold((0, 0.0f64), |b, (j, &c)| {
                        if c.abs() > b.1 { (j, c.abs()) } else { b }
                    });
                    self.lambda = c;
                    if c == 0.0 || !self.add(j) {
                        return Step::Done;
                    }
                }
                Step::Continue
            }
            Event::Enter(j) => {
                self.add(j);
                Step::Continue
            }
        }
    }

    /// Re-solves the active coefficients at `λ = 0` from the normal equations.
    ///
    /// Off-support coefficients that the path leaves at round-off level may
    /// change sign here; that is harmless, so only finiteness and a residual
    /// no worse than the path's are required.
    fn polish(&mut self) {
        if self.active.is_empty() {
            return;
        }
        let mut x: Vec<f64> = self.active.iter().map(|&j| dot(self.dec.phi_t.row(j), self.y)).collect();
        self.factor.solve(&mut x);
        if x.iter().any(|v| !v.is_finite()) {
            return;
        }
        let residual = |coef: &[f64]| {
            let mut r = self.y.to_vec();
            for (&j, &c) in self.active.iter().zip(coef) {
                for (ri, pj) in r.iter_mut().zip(self.dec.phi_t.row(j)) {
                    *ri -= c * pj;
                }
            }
            norm2(&r)
        };
        if residual(&x) <= residual(&self.coef) {
            self.coef = x;
        }
    }

    fn solution(&self, d: usize) -> Vec<f64> {
        let mut x = vec![0.0; d];
        for (&j, &c) in self.active.iter().zip(&self.coef) {
            x[j] = c;
        }
        x
    }
}

/// `arg min ‖z‖₁` subject to `‖Φz − y‖₂ ≤ η`.
pub fn basis_pursuit(phi: &DenseMatrix, y: &[f64], settings: &SolveSettings) -> Result<SolveReport> {
    L1Decoder::new(phi).solve(y, settings)
}

/// Column-wise decoding of a measurement matrix `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeReport {
    /// `d × m_X` matrix of decoded columns.
    pub x_hat: DenseMatrix,
    pub converged: Vec<bool>,
    pub reports: Vec<SolveReport>,
}

impl DecodeReport {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Decodes every column of `Y` independently (in parallel, ordered by column).
pub fn decode_columns(phi: &DenseMatrix, y: &DenseMatrix, settings: &SolveSettings) -> Result<DecodeReport> {
    if y.rows() != phi.rows() {
        return invalid(format!(
            "Y has {} rows but Phi has {} measurements",
            y.rows(),
            phi.rows()
        ));
    }
    let dec = L1Decoder::new(phi);
    let reports = (0..y.cols())
        .into_par_iter()
        .map(|j| dec.solve(&y.column(j), settings))
        .collect::<Result<Vec<_>>>()?;
    let columns: Vec<Vec<f64>> = reports.iter().map(|r| r.solution.clone()).collect();
    let x_hat = if columns.is_empty() {
        DenseMatrix::zeros(phi.cols(), 0)
    } else {
        DenseMatrix::from_columns(&columns)?
    };
    Ok(DecodeReport {
        x_hat,
        converged: reports.iter().map(|r| r.converged).collect(),
        reports,
    })
}

/// One instance for [`verify_noisy_bound`]: recover `x` from `Φx + noise`.
#[derive(Clone, Debug)]
pub struct NoisyInstance {
    pub phi: DenseMatrix,
    pub x: Vec<f64>,
    pub noise: Vec<f64>,
    /// Sparsity level `K` of the best-term comparison.
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyBoundReport {
    /// Smallest `C` making the bound hold on every trial.
    pub constant: f64,
    pub errors: Vec<f64>,
    pub scales: Vec<f64>,
}

/// `K^{-1/2} σ_K(x)₁ + max{‖ε‖₂, √(ln d)‖ε‖_∞}`.
pub fn noisy_bound_scale(x: &[f64], noise: &[f64], k: usize) -> Result<f64> {
    let best = best_k_term(x, k)?;
    let tail: f64 = x.iter().zip(&best).map(|(a, b)| (a - b).abs()).sum();
    let d = x.len() as f64;
    let inf = noise.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(tail / (k as f64).sqrt() + norm2(noise).max(d.ln().sqrt() * inf))
}

/// Measures the constant in `‖x − Δ(Φx + ε)‖₂ ≤ C (K^{-1/2}σ_K(x)₁ + max{‖ε‖₂, √(ln d)‖ε‖_∞})`
/// for the equality decoder `Δ`.
pub fn verify_noisy_bound(
    mut generator: impl FnMut(usize) -> NoisyInstance,
    trials: usize,
    settings: &SolveSettings,
) -> Result<NoisyBoundReport> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let mut report = NoisyBoundReport {
        constant: 0.0,
        errors: Vec::with_capacity(trials),
        scales: Vec::with_capacity(trials),
    };
    for t in 0..trials {
        let inst = generator(t);
        let mut y = inst.phi.matvec(&inst.x);
        if inst.noise.len() != y.len() {
            return invalid("noise length must match the number of measurements");
        }
        y.iter_mut().zip(&inst.noise).for_each(|(a, b)| *a += b);
        let sol = basis_pursuit(&inst.phi, &y, settings)?;
        if sol.status == SolveStatus::IterationLimit {
            return Err(Error::SolverFailure {
                iterations: sol.iterations,
                residual: sol.final_residual,
            });
        }
        let err = norm2(
            &sol.solution.iter().zip(&inst.x).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        let scale = noisy_bound_scale(&inst.x, &inst.noise, inst.k)?;
        let ratio = if scale > 0.0 {
            err / scale
        } else if err > 1e-12 {
            f64::INFINITY
        } else {
            0.0
        };
        report.constant = report.constant.max(ratio);
        report.errors.push(err);
        report.scales.push(scale);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{bernoulli_directions, derive_stream};
    use rand::Rng;

    fn sparse_signal(d: usize, k: usize, seed: u64) -> Vec<f64> {
        let mut s = derive_stream(seed, &crate::labels!["signal"]);
        let mut x = vec![0.0; d];
        for j in rand::seq::index::sample(&mut s, d, k) {
            x[j] = if s.random::<bool>() { 1.0 } else { -1.0 };
        }
        x
    }

    #[test]
    fn zero_measurements_give_zero() {
        let phi = bernoulli_directions(30, 10, &mut derive_stream(1, &[])).into_matrix();
        let r = basis_pursuit(&phi, &[0.0; 10], &SolveSettings::default()).unwrap();
        assert!(r.converged);
        assert!(r.solution.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn orthogonal_square_system() {
        let s = 0.5f64.sqrt();
        let phi = DenseMatrix::new(2, 2, vec![s, s, s, -s]).unwrap();
        let y = [0.3, -1.1];
        let r = basis_pursuit(&phi, &y, &SolveSettings::default()).unwrap();
        let expect = phi.t_matvec(&y);
        assert!(r.converged);
        for (a, b) in r.solution.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_sparse_signal() {
        for seed in 0..5 {
            let phi = bernoulli_directions(200, 60, &mut derive_stream(seed, &["phi".into()]))
                .into_matrix();
            let x0 = sparse_signal(200, 4, seed);
            let r = basis_pursuit(&phi, &phi.matvec(&x0), &SolveSettings::default()).unwrap();
            assert!(r.converged);
            let err = norm2(&r.solution.iter().zip(&x0).map(|(a, b)| a - b).collect::<Vec<_>>());
            assert!(err < 1e-9, "seed {seed}: {err}");
        }
    }

    #[test]
    fn dense_data_is_fitted_exactly() {
        let mut s = derive_stream(5, &[]);
        let phi = bernoulli_directions(120, 40, &mut s).into_matrix();
        let y: Vec<f64> = (0..40).map(|_| s.random::<f64>() - 0.5).collect();
        let r = basis_pursuit(&phi, &y, &SolveSettings::default()).unwrap();
        assert!(r.converged, "{:?} {}", r.status, r.final_residual);
        assert!(r.solution.iter().filter(|v| **v != 0.0).count() <= 40);
    }

    #[test]
    fn tolerance_constraint_is_active() {
        let mut s = derive_stream(6, &[]);
        let phi = bernoulli_directions(80, 30, &mut s).into_matrix();
        let y: Vec<f64> = (0..30).map(|_| s.random::<f64>() - 0.5).collect();
        let eta = 0.3 * norm2(&y);
        let r = basis_pursuit(&phi, &y, &SolveSettings::with_residual_tol(eta)).unwrap();
        assert!(r.converged);
        assert!((r.final_residual - eta).abs() < 1e-9);
        let exact = basis_pursuit(&phi, &y, &SolveSettings::default()).unwrap();
        assert!(r.l1_value < exact.l1_value);
    }

    #[test]
    fn inconsistent_system_is_relaxed() {
        let phi = DenseMatrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let r = basis_pursuit(&phi, &[1.0, 2.0, 3.0], &SolveSettings::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Relaxed);
        assert!(!r.converged);
        assert!((r.solution[0] - 1.0).abs() < 1e-12 && (r.solution[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let phi = DenseMatrix::identity(3);
        assert!(basis_pursuit(&phi, &[1.0, 2.0], &SolveSettings::default()).is_err());
        let bad = SolveSettings { opt_tol: 0.0, ..Default::default() };
        assert!(basis_pursuit(&phi, &[1.0, 2.0, 3.0], &bad).is_err());
    }

    #[test]
    fn bitmap_flags_only_the_inconsistent_column() {
        let mut s = derive_stream(9, &[]);
        let phi = bernoulli_directions(30, 40, &mut s).into_matrix();
        let mut cols: Vec<Vec<f64>> = (0..4).map(|i| phi.matvec(&sparse_signal(30, 3, 50 + i))).collect();
        for v in cols[2].iter_mut() {
            *v += s.random::<f64>() - 0.5;
        }
        let y = DenseMatrix::from_columns(&cols).unwrap();
        let rep = decode_columns(&phi, &y, &SolveSettings::default()).unwrap();
        assert_eq!(rep.converged, vec![true, true, false, true]);
        assert_eq!(rep.reports[2].status, SolveStatus::Relaxed);
        assert_eq!(rep.x_hat.shape(), (30, 4));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let mut s = derive_stream(9, &[]);
        let phi = bernoulli_directions(100, 40, &mut s).into_matrix();
        let y: Vec<f64> = (0..40).map(|_| s.random::<f64>() - 0.5).collect();
        let settings = SolveSettings { max_iters: 5, ..Default::default() };
        let r = basis_pursuit(&phi, &y, &settings).unwrap();
        assert_eq!(r.status, SolveStatus::IterationLimit);
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
    }
}

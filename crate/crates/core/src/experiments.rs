//! Config-driven batch experiments: phase diagrams of recovery success over
//! `(m_X, m_Φ, ν)` grids, error-versus-budget curves, and their CSV, JSON and
//! PGM outputs.
//!
//! All randomness is derived from the master seed and the cell/trial indices,
//! so a grid is reproducible bit for bit regardless of thread count. Within a
//! cell, every noise level reuses the same sampling points and directions
//! (only the noise draws differ), which makes rates comparable across levels.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l1::SolveSettings;
use crate::labels;
use crate::oracle::{ModelOptions, ModelTemplate, NoiseKind, NoiseSpec, RidgeOracle};
use crate::recovery::{
    algorithm1, algorithm2, build_sketch, identify_active_coordinates, sign_aligned_error,
    subspace_error, RidgeEstimate,
};
use crate::sampling::{derive_seed, derive_stream, SamplingPlan, Stream};

/// CSV header of phase-diagram grids.
pub const GRID_CSV_HEADER: &str = "mX,mPhi,nu,trials,successes,rate,mean_queries,mean_seconds";
/// CSV header of error curves.
pub const CURVE_CSV_HEADER: &str =
    "mX,mPhi,nu,trials,failures,median_error,median_sup_error,median_indicator";

/// Event counted as a successful recovery.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SuccessCriterion {
    /// The top row norms of `X̂` sit exactly on the active coordinates.
    ActiveSet,
    SubspaceError(f64),
    SignError(f64),
}

impl FromStr for SuccessCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let threshold = |v: &str| -> Result<f64> {
            match v.parse::<f64>() {
                Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
                _ => Err(Error::Config(format!("criterion threshold must be positive in '{s}'"))),
            }
        };
        match s.split_once(':') {
            None if s == "active-set" => Ok(SuccessCriterion::ActiveSet),
            Some(("subspace-error", t)) => Ok(SuccessCriterion::SubspaceError(threshold(t)?)),
            Some(("sign-error", t)) => Ok(SuccessCriterion::SignError(threshold(t)?)),
            _ => Err(Error::Config(format!("unknown success criterion '{s}'"))),
        }
    }
}

impl fmt::Display for SuccessCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuccessCriterion::ActiveSet => write!(f, "active-set"),
            SuccessCriterion::SubspaceError(t) => write!(f, "subspace-error:{t}"),
            SuccessCriterion::SignError(t) => write!(f, "sign-error:{t}"),
        }
    }
}

impl Serialize for SuccessCriterion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SuccessCriterion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    PhaseDiagram,
    ErrorCurve,
}

fn default_criterion() -> SuccessCriterion {
    SuccessCriterion::ActiveSet
}

fn default_noise_kind() -> NoiseKind {
    NoiseKind::Gaussian
}

fn default_noise_levels() -> Vec<f64> {
    vec![0.0]
}

fn default_trials() -> usize {
    20
}

fn default_n_test() -> usize {
    200
}

fn default_noise_tol_factor() -> f64 {
    1.0
}

/// One experiment, read from a JSON document with unknown keys rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub kind: ExperimentKind,
    /// Registry name, e.g. `figure2` or `linear:sparse4`.
    pub model: String,
    pub d: usize,
    /// Ridge dimension used by subspace criteria; defaults to the model's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub m_x: Vec<usize>,
    pub m_phi: Vec<usize>,
    pub epsilon: f64,
    #[serde(default = "default_noise_kind")]
    pub noise_kind: NoiseKind,
    #[serde(default = "default_noise_levels")]
    pub noise_levels: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_criterion")]
    pub criterion: SuccessCriterion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bar_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default)]
    pub solver: SolveSettings,
    /// Decoder tolerance in units of the expected noise norm of one column of
    /// quotients; 0 keeps the configured solver tolerance.
    #[serde(default = "default_noise_tol_factor")]
    pub noise_tol_factor: f64,
    /// Test points per trial for sup-error estimates in error curves.
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    /// Record wall-clock time per cell. Off by default so outputs are reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    /// The figure-2 phase diagram: `d = 1000`, `ε = 0.1`, `m_X ∈ {6,…,60}`,
    /// `m_Φ ∈ {20,…,200}`, three Gaussian noise levels, 20 trials per cell.
    pub fn figure2() -> Self {
        Self {
            name: Some("figure2".into()),
            kind: ExperimentKind::PhaseDiagram,
            model: "figure2".into(),
            d: 1000,
            k: None,
            m_x: (1..=10).map(|l| 6 * l).collect(),
            m_phi: (1..=10).map(|l| 20 * l).collect(),
            epsilon: 0.1,
            noise_kind: NoiseKind::Gaussian,
            noise_levels: vec![0.1, 0.01, 0.001],
            trials: 20,
            seed: 2012,
            criterion: SuccessCriterion::ActiveSet,
            bar_eps: None,
            sparsity: None,
            q: None,
            solver: SolveSettings::default(),
            noise_tol_factor: default_noise_tol_factor(),
            n_test: default_n_test(),
            timing: false,
            output: None,
        }
    }

    /// Desk-check preset: `d = 200` and 5 trials per cell.
    pub fn into_smoke(mut self) -> Self {
        self.d = 200;
        self.trials = 5;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn template(&self) -> Result<ModelTemplate> {
        self.model
            .parse()
            .map_err(|e: Error| Error::Config(e.to_string()))
    }

    pub fn model_options(&self) -> Result<ModelOptions> {
        let t = self.template()?;
        let base = ModelOptions::default();
        Ok(ModelOptions {
            bar_eps: self.bar_eps.unwrap_or(t.default_bar_eps()),
            sparsity: self.sparsity.unwrap_or(base.sparsity),
            q: self.q.unwrap_or(base.q),
        })
    }

    pub fn ridge_dim(&self) -> Result<usize> {
        Ok(self.k.unwrap_or(self.template()?.ridge_dim()))
    }

    /// Checks everything that can be checked without running a trial,
    /// including the finite-difference step of every grid cell.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.m_x.is_empty() || self.m_phi.is_empty() || self.noise_levels.is_empty() {
            return cfg("m_x, m_phi and noise_levels must be non-empty".into());
        }
        if self.trials == 0 || self.n_test == 0 {
            return cfg("trials and n_test must be at least 1".into());
        }
        if self.noise_levels.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return cfg("noise levels must be finite and non-negative".into());
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.noise_tol_factor >= 0.0 && self.noise_tol_factor.is_finite()) {
            return cfg("noise_tol_factor must be finite and non-negative".into());
        }
        let k = self.ridge_dim()?;
        if k == 0 || k > self.d {
            return cfg(format!("k = {k} is out of range for d = {}", self.d));
        }
        if matches!(self.criterion, SuccessCriterion::SubspaceError(_)) && self.m_x.iter().any(|&m| m < k) {
            return cfg("every m_x must be at least k for subspace recovery".into());
        }
        let oracle = self.build_oracle()?;
        for &m_x in &self.m_x {
            for &m_phi in &self.m_phi {
                SamplingPlan::new(m_x, m_phi, self.epsilon, 0)
                    .validate(self.d, oracle.domain(), oracle.spec().bar_eps)
                    .map_err(|e| Error::Config(format!("cell (m_x={m_x}, m_phi={m_phi}): {e}")))?;
            }
        }
        Ok(())
    }

    /// Decoder settings for one cell: the residual tolerance is raised to
    /// `noise_tol_factor` times the expected noise norm of a quotient column.
    pub fn solver_for(&self, m_phi: usize, noise: &NoiseSpec) -> SolveSettings {
        let eta = self.noise_tol_factor * noise.quotient_column_norm(m_phi, self.epsilon);
        SolveSettings {
            residual_tol: self.solver.residual_tol.max(eta),
            ..self.solver
        }
    }

    /// The fixed model instance shared by all trials.
    pub fn build_oracle(&self) -> Result<RidgeOracle> {
        let model_seed = derive_seed(self.seed, &labels!["model"]);
        self.template()?
            .build(self.d, self.model_options()?, model_seed)
            .map_err(|e| Error::Config(format!("model '{}': {e}", self.model)))
    }
}

/// Aggregated outcome of one `(m_X, m_Φ, ν)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub m_x: usize,
    pub m_phi: usize,
    pub nu: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub mean_queries: f64,
    pub mean_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub config: ExperimentConfig,
    pub seed: u64,
    /// Cells ordered by noise level, then `m_Φ`, then `m_X`.
    pub cells: Vec<CellRecord>,
}

impl GridResult {
    pub fn cell(&self, m_x: usize, m_phi: usize, nu: f64) -> Option<&CellRecord> {
        self.cells
            .iter()
            .find(|c| c.m_x == m_x && c.m_phi == m_phi && c.nu == nu)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(GRID_CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.m_x, c.m_phi, c.nu, c.trials, c.successes, c.rate, c.mean_queries, c.mean_seconds
            ));
        }
        out
    }
}

struct TrialOutcome {
    success: bool,
    queries: u64,
    seconds: f64,
}

/// Seed of the sampling plan of one trial; independent of the noise level.
fn plan_seed(seed: u64, i_mx: usize, i_phi: usize, trial: usize) -> u64 {
    derive_seed(seed, &labels!["plan", i_mx, i_phi, trial])
}

fn noise_stream(seed: u64, i_mx: usize, i_phi: usize, i_nu: usize, trial: usize) -> Stream {
    derive_stream(seed, &labels!["noise", i_mx, i_phi, i_nu, trial])
}

fn noise_spec(kind: NoiseKind, level: f64) -> NoiseSpec {
    if level == 0.0 {
        NoiseSpec::none()
    } else {
        NoiseSpec { kind, level }
    }
}

/// Whether an error ends a trial unsuccessfully rather than aborting the grid.
fn is_trial_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::DegenerateSignal(_)
            | Error::SketchFailure(_)
            | Error::SolverFailure { .. }
            | Error::NumericalFailure(_)
    )
}

fn run_trial(
    cfg: &ExperimentConfig,
    oracle: &mut RidgeOracle,
    plan: &SamplingPlan,
    k: usize,
    settings: &SolveSettings,
) -> Result<bool> {
    let a = oracle.ridge_matrix().clone();
    match cfg.criterion {
        SuccessCriterion::ActiveSet => {
            let active = oracle.active_coordinates();
            let sketch = build_sketch(oracle, plan, settings)?;
            Ok(identify_active_coordinates(&sketch, active.len())? == active)
        }
        SuccessCriterion::SubspaceError(t) => {
            let r = algorithm2(oracle, k, plan, settings)?;
            Ok(subspace_error(&r.a_hat, &a)? <= t)
        }
        SuccessCriterion::SignError(t) => {
            let r = algorithm1(oracle, plan, settings)?;
            Ok(sign_aligned_error(&r.a_hat, a.row(0))? <= t)
        }
    }
}

/// Runs every trial of every cell and aggregates success rates.
pub fn run_phase_diagram(cfg: &ExperimentConfig) -> Result<GridResult> {
    cfg.validate()?;
    let base = cfg.build_oracle()?;
    let k = cfg.ridge_dim()?;
    let (nx, np, nn) = (cfg.m_x.len(), cfg.m_phi.len(), cfg.noise_levels.len());
    let cells = nn * np * nx;
    let tasks: Vec<(usize, usize)> = (0..cells)
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let outcomes = tasks
        .par_iter()
        .map(|&(c, t)| {
            let (i_nu, i_phi, i_mx) = (c / (np * nx), (c / nx) % np, c % nx);
            let plan = SamplingPlan::new(
                cfg.m_x[i_mx],
                cfg.m_phi[i_phi],
                cfg.epsilon,
                plan_seed(cfg.seed, i_mx, i_phi, t),
            );
            let noise = noise_spec(cfg.noise_kind, cfg.noise_levels[i_nu]);
            let settings = cfg.solver_for(plan.m_phi, &noise);
            let stream = noise_stream(cfg.seed, i_mx, i_phi, i_nu, t);
            let mut oracle = base.fork(stream.clone()).with_noise(noise, stream);
            let start = cfg.timing.then(Instant::now);
            let success = match run_trial(cfg, &mut oracle, &plan, k, &settings) {
                Ok(s) => s,
                Err(e) if is_trial_failure(&e) => false,
                Err(e) => return Err(e),
            };
            Ok(TrialOutcome {
                success,
                queries: oracle.query_count(),
                seconds: start.map_or(0.0, |s| s.elapsed().as_secs_f64()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(cells);
    for (c, chunk) in outcomes.chunks(cfg.trials).enumerate() {
        let (i_nu, i_phi, i_mx) = (c / (np * nx), (c / nx) % np, c % nx);
        let n = chunk.len() as f64;
        let successes = chunk.iter().filter(|o| o.success).count();
        records.push(CellRecord {
            m_x: cfg.m_x[i_mx],
            m_phi: cfg.m_phi[i_phi],
            nu: cfg.noise_levels[i_nu],
            trials: chunk.len(),
            successes,
            rate: successes as f64 / n,
            mean_queries: chunk.iter().map(|o| o.queries as f64).sum::<f64>() / n,
            mean_seconds: chunk.iter().map(|o| o.seconds).sum::<f64>() / n,
        });
    }
    Ok(GridResult {
        config: cfg.clone(),
        seed: cfg.seed,
        cells: records,
    })
}

/// Binary PGM of one noise level (`Some(i)`) or all levels side by side
/// (`None`). Gray is `round(255(1 − rate))`, rows run over `m_Φ` ascending and
/// columns over `m_X` ascending.
pub fn heatmap_bytes(grid: &GridResult, level: Option<usize>) -> Vec<u8> {
    let cfg = &grid.config;
    let (nx, np, nn) = (cfg.m_x.len(), cfg.m_phi.len(), cfg.noise_levels.len());
    let mut order_x: Vec<usize> = (0..nx).collect();
    order_x.sort_by_key(|&i| cfg.m_x[i]);
    let mut order_p: Vec<usize> = (0..np).collect();
    order_p.sort_by_key(|&i| cfg.m_phi[i]);
    let levels: Vec<usize> = match level {
        Some(i) => vec![i],
        None => (0..nn).collect(),
    };
    let width = nx * levels.len();
    let mut out = format!("P5 {width} {np} 255\n").into_bytes();
    for &ip in &order_p {
        for &inu in &levels {
            for &ix in &order_x {
                let rate = grid.cells[(inu * np + ip) * nx + ix].rate;
                out.push((255.0 * (1.0 - rate)).round() as u8);
            }
        }
    }
    out
}

/// Writes the combined heatmap to `path`.
pub fn emit_heatmap(grid: &GridResult, path: &Path) -> Result<()> {
    fs::write(path, heatmap_bytes(grid, None))?;
    Ok(())
}

/// Writes `grid.csv`, `grid.pgm`, one `grid_nu<i>.pgm` per noise level when
/// there are several, and `result.json` into `dir`.
pub fn write_grid_outputs(grid: &GridResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("grid.csv"), grid.to_csv())?;
    emit_heatmap(grid, &dir.join("grid.pgm"))?;
    if grid.config.noise_levels.len() > 1 {
        for i in 0..grid.config.noise_levels.len() {
            fs::write(dir.join(format!("grid_nu{i}.pgm")), heatmap_bytes(grid, Some(i)))?;
        }
    }
    write_json(grid, &dir.join("result.json"))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(std::io::Error::from)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Largest `|f(x) − f̂(x)|` over `n_test` points drawn one at a time from the
/// test distribution of the oracle's domain. This is a lower bound on the sup
/// norm. Drawing points sequentially makes estimates for nested `n_test` values
/// come from nested point sets.
pub fn estimate_sup_error(
    est: &impl RidgeEstimate,
    oracle: &mut RidgeOracle,
    n_test: usize,
    stream: &mut Stream,
) -> Result<f64> {
    if n_test == 0 {
        return Err(Error::InvalidArgument("n_test must be at least 1".into()));
    }
    let (d, domain) = (oracle.dim(), oracle.domain());
    let mut worst = 0.0f64;
    for _ in 0..n_test {
        let x = domain.sample_test_points(d, 1, stream);
        let x = x.row(0);
        let f = oracle.evaluate(x)?;
        let f_hat = oracle.evaluate(&est.project(x))?;
        worst = worst.max((f - f_hat).abs());
    }
    Ok(worst)
}

/// Per-trial measurements of an error curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTrial {
    pub m_x: usize,
    pub m_phi: usize,
    pub nu: f64,
    pub trial: usize,
    /// `None` when the trial ended in a degenerate signal or sketch failure.
    pub error: Option<f64>,
    pub sup_error: Option<f64>,
    pub indicator: Option<f64>,
    pub queries: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub m_x: usize,
    pub m_phi: usize,
    pub nu: f64,
    pub trials: usize,
    pub failures: usize,
    pub median_error: f64,
    pub median_sup_error: f64,
    pub median_indicator: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub config: ExperimentConfig,
    pub rows: Vec<CurveRow>,
    pub trials: Vec<CurveTrial>,
}

impl ErrorCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.m_x, r.m_phi, r.nu, r.trials, r.failures, r.median_error, r.median_sup_error,
                r.median_indicator
            ));
        }
        out
    }
}

/// Median of the finite values, `NaN` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            r[p] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("need two equally long samples of size >= 2".into()));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    Ok(sxy / (sxx * syy).sqrt())
}

/// Median recovery error, sup-error estimate and a posteriori indicator per cell.
///
/// Single-direction models use Algorithm 1 and the sign-aligned error; others
/// use the subspace algorithm with the configured `k`.
pub fn run_error_curve(cfg: &ExperimentConfig) -> Result<ErrorCurve> {
    cfg.validate()?;
    let base = cfg.build_oracle()?;
    let k = cfg.ridge_dim()?;
    let a = base.ridge_matrix().clone();
    let (nx, np, nn) = (cfg.m_x.len(), cfg.m_phi.len(), cfg.noise_levels.len());
    let tasks: Vec<(usize, usize)> = (0..nn * np * nx)
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let trials = tasks
        .par_iter()
        .map(|&(c, t)| {
            let (i_nu, i_phi, i_mx) = (c / (np * nx), (c / nx) % np, c % nx);
            let plan = SamplingPlan::new(
                cfg.m_x[i_mx],
                cfg.m_phi[i_phi],
                cfg.epsilon,
                plan_seed(cfg.seed, i_mx, i_phi, t),
            );
            let noise = noise_spec(cfg.noise_kind, cfg.noise_levels[i_nu]);
            let settings = cfg.solver_for(plan.m_phi, &noise);
            let stream = noise_stream(cfg.seed, i_mx, i_phi, i_nu, t);
            let mut oracle = base.fork(stream.clone()).with_noise(noise, stream);
            let mut test_stream = derive_stream(cfg.seed, &labels!["test", i_mx, i_phi, i_nu, t]);
            let measured: Result<(f64, f64, f64, u64)> = (|| {
                if k == 1 {
                    let r = algorithm1(&mut oracle, &plan, &settings)?;
                    let err = sign_aligned_error(&r.a_hat, a.row(0))?;
                    let sup = estimate_sup_error(&r, &mut oracle, cfg.n_test, &mut test_stream)?;
                    Ok((err, sup, r.indicator, r.queries_used))
                } else {
                    let r = algorithm2(&mut oracle, k, &plan, &settings)?;
                    let err = subspace_error(&r.a_hat, &a)?;
                    let sup = estimate_sup_error(&r, &mut oracle, cfg.n_test, &mut test_stream)?;
                    Ok((err, sup, r.indicator, r.queries_used))
                }
            })();
            let base_record = CurveTrial {
                m_x: plan.m_x,
                m_phi: plan.m_phi,
                nu: cfg.noise_levels[i_nu],
                trial: t,
                error: None,
                sup_error: None,
                indicator: None,
                queries: plan.query_budget(),
            };
            match measured {
                Ok((e, s, i, q)) => Ok(CurveTrial {
                    error: Some(e),
                    sup_error: Some(s),
                    indicator: Some(i),
                    queries: q,
                    ..base_record
                }),
                Err(e) if is_trial_failure(&e) => Ok(base_record),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = trials
        .chunks(cfg.trials)
        .map(|chunk| CurveRow {
            m_x: chunk[0].m_x,
            m_phi: chunk[0].m_phi,
            nu: chunk[0].nu,
            trials: chunk.len(),
            failures: chunk.iter().filter(|t| t.error.is_none()).count(),
            median_error: median(chunk.iter().filter_map(|t| t.error)),
            median_sup_error: median(chunk.iter().filter_map(|t| t.sup_error)),
            median_indicator: median(chunk.iter().filter_map(|t| t.indicator)),
        })
        .collect();
    Ok(ErrorCurve {
        config: cfg.clone(),
        rows,
        trials,
    })
}

/// Writes `curve.csv` and `result.json` into `dir`.
pub fn write_curve_outputs(curve: &ErrorCurve, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("curve.csv"), curve.to_csv())?;
    write_json(curve, &dir.join("result.json"))
}

//! Command-line front end: batch experiments and analysis tables.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ridgelearn::analysis::{
    alpha_k1, alpha_radial, concentration_exact, concentration_lower_bound, decay_exponent,
    moment, nu1, nu2, pushforward_density, success_probability, verify_hoeffding_max,
    verify_matrix_chernoff, BoundCase, BoundParams, GradientSampler, QuadratureSpec,
    RankOneSampler, TailCheck,
};
use ridgelearn::experiments::{
    run_error_curve, run_phase_diagram, write_curve_outputs, write_grid_outputs, ExperimentConfig,
    ExperimentKind,
};
use ridgelearn::Error;

#[derive(Parser)]
#[command(name = "ridgelearn", version, about = "Learn ridge functions from point queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a phase-diagram or error-curve experiment from a JSON config.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// d = 200 and 5 trials per cell; uses the figure-2 grid when no config is given.
        #[arg(long)]
        smoke: bool,
    },
    /// Print an analysis table as CSV on stdout.
    Analyze {
        #[command(subcommand)]
        op: AnalyzeOp,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    K1,
    K,
}

#[derive(Subcommand)]
enum AnalyzeOp {
    /// Push-forward density of the sphere measure at one point `y` of R^k.
    Density { k: usize, d: usize, #[arg(required = true, allow_negative_numbers = true)] y: Vec<f64> },
    /// Closed-form moment E[y^ell] of one coordinate on the sphere.
    Moment { ell: u32, #[arg(required = true)] d: Vec<usize> },
    /// alpha for g'(y) = y^M.
    AlphaPower { m: i32, #[arg(required = true)] d: Vec<usize> },
    /// alpha for the radial profile g0(r) = r^2.
    AlphaRadial { k: usize, #[arg(required = true)] d: Vec<usize> },
    /// Fitted log-log slope of alpha for g'(y) = y^M over the given dimensions.
    Decay { m: i32, #[arg(required = true)] d: Vec<usize> },
    /// Lower bound and exact value of the spherical-cap concentration.
    Concentration { k: usize, d: usize, eps: f64 },
    /// Error level of the single-direction algorithm.
    Nu1 { m_phi: usize, d: usize, epsilon: f64, #[arg(long = "param")] params: Vec<String> },
    /// Error level of the subspace algorithm.
    Nu2 { m_phi: usize, d: usize, epsilon: f64, k: usize, #[arg(long = "param")] params: Vec<String> },
    /// Lower bound on the success probability.
    SuccessProbability {
        #[arg(value_enum)]
        case: CaseArg,
        m_phi: usize,
        m_x: usize,
        d: usize,
        k: usize,
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// Monte-Carlo check of the max-of-derivatives tail for g'(y) = y^M.
    Hoeffding { m: i32, d: usize, m_x: usize, s: f64, trials: usize, seed: u64 },
    /// Monte-Carlo check of the matrix Chernoff lower tail for rank-one samples.
    ChernoffRankOne { k: usize, c: f64, m: usize, s: f64, trials: usize, seed: u64 },
    /// Monte-Carlo check of the matrix Chernoff lower tail for radial gradient samples.
    ChernoffRadial { k: usize, d: usize, m: usize, s: f64, trials: usize, seed: u64 },
}

fn parse_params(items: &[String]) -> Result<BoundParams, Error> {
    let mut p = BoundParams::default();
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{item}'")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| Error::Config(format!("not a number in '{item}'")))?;
        let slot = match key {
            "q" => &mut p.q,
            "c1" => &mut p.c1,
            "c2" => &mut p.c2,
            "alpha" => &mut p.alpha,
            "s" => &mut p.s,
            "c_prime" => &mut p.c_prime,
            "c" => &mut p.c,
            "c1_prime" => &mut p.c1_prime,
            "delta" => &mut p.delta,
            _ => return Err(Error::Config(format!("unknown bound parameter '{key}'"))),
        };
        *slot = v;
    }
    p.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(p)
}

fn tail_row(t: &TailCheck) -> String {
    format!("{},{},{},{},{},{}", t.trials, t.hits, t.frequency, t.bound, t.std_error, t.holds)
}

fn analyze(op: AnalyzeOp) -> Result<String, Error> {
    let quad = QuadratureSpec::default();
    let power = |m: i32| move |y: f64| y.powi(m);
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    match op {
        AnalyzeOp::Density { k, d, y } => {
            if y.len() != k {
                return Err(Error::Config(format!("expected {k} coordinates, got {}", y.len())));
            }
            line("k,d,y_norm,value".into());
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            line(format!("{k},{d},{norm},{}", pushforward_density(k, d, &y)?));
        }
        AnalyzeOp::Moment { ell, d } => {
            line("ell,d,value".into());
            for d in d {
                line(format!("{ell},{d},{}", moment(ell, d)?));
            }
        }
        AnalyzeOp::AlphaPower { m, d } => {
            line("M,d,alpha".into());
            for d in d {
                line(format!("{m},{d},{}", alpha_k1(&power(m), d, &quad)?));
            }
        }
        AnalyzeOp::AlphaRadial { k, d } => {
            line("k,d,alpha".into());
            for d in d {
                line(format!("{k},{d},{}", alpha_radial(&|r| 2.0 * r, k, d, &quad)?));
            }
        }
        AnalyzeOp::Decay { m, d } => {
            let values = d
                .iter()
                .map(|&d| Ok((d as f64, alpha_k1(&power(m), d, &quad)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            line("M,d_min,d_max,slope".into());
            let (lo, hi) = (d[0], d[d.len() - 1]);
            line(format!("{m},{lo},{hi},{}", decay_exponent(&values)?));
        }
        AnalyzeOp::Concentration { k, d, eps } => {
            line("k,d,eps,lower_bound,exact".into());
            line(format!(
                "{k},{d},{eps},{},{}",
                concentration_lower_bound(k, d, eps)?,
                concentration_exact(k, d, eps)?
            ));
        }
        AnalyzeOp::Nu1 { m_phi, d, epsilon, params } => {
            let p = parse_params(&params)?;
            line("mPhi,d,epsilon,q,nu1".into());
            line(format!("{m_phi},{d},{epsilon},{},{}", p.q, nu1(m_phi, d, epsilon, &p)?));
        }
        AnalyzeOp::Nu2 { m_phi, d, epsilon, k, params } => {
            let p = parse_params(&params)?;
            line("mPhi,d,epsilon,k,q,nu2".into());
            line(format!("{m_phi},{d},{epsilon},{k},{},{}", p.q, nu2(m_phi, d, epsilon, k, &p)?));
        }
        AnalyzeOp::SuccessProbability { case, m_phi, m_x, d, k, params } => {
            let p = parse_params(&params)?;
            let case = match case {
                CaseArg::K1 => BoundCase::K1,
                CaseArg::K => BoundCase::KGeq1,
            };
            line("mPhi,mX,d,k,probability".into());
            line(format!(
                "{m_phi},{m_x},{d},{k},{}",
                success_probability(case, m_phi, m_x, d, k, &p)?
            ));
        }
        AnalyzeOp::Hoeffding { m, d, m_x, s, trials, seed } => {
            let mut a = vec![0.0; d];
            if let Some(first) = a.first_mut() {
                *first = 1.0;
            }
            let r = verify_hoeffding_max(&power(m), &a, 1.0, m_x, s, trials, seed, &quad)?;
            line("alpha,threshold,trials,hits,frequency,bound,std_error,holds".into());
            line(format!("{},{},{}", r.alpha, r.threshold, tail_row(&r.check)));
        }
        AnalyzeOp::ChernoffRankOne { k, c, m, s, trials, seed } => {
            let r = verify_matrix_chernoff(&RankOneSampler { k, c }, m, s, trials, seed)?;
            chernoff_rows(&mut line, &r);
        }
        AnalyzeOp::ChernoffRadial { k, d, m, s, trials, seed } => {
            let sampler = GradientSampler::radial_square(k, d, &quad)?;
            let r = verify_matrix_chernoff(&sampler, m, s, trials, seed)?;
            chernoff_rows(&mut line, &r);
        }
    }
    Ok(out)
}

fn chernoff_rows(line: &mut impl FnMut(String), r: &ridgelearn::analysis::ChernoffReport) {
    line("tail,mu_min,mu_max,trials,hits,frequency,bound,std_error,holds".into());
    line(format!("lower,{},{},{}", r.mu_min, r.mu_max, tail_row(&r.lower)));
    if let Some(u) = &r.upper {
        line(format!("upper,{},{},{}", r.mu_min, r.mu_max, tail_row(u)));
    }
}

fn load_config(path: Option<PathBuf>, smoke: bool) -> Result<ExperimentConfig, Error> {
    let cfg = match path {
        Some(p) => ExperimentConfig::from_json(&fs::read_to_string(&p)?)?,
        None if smoke => ExperimentConfig::figure2(),
        None => return Err(Error::Config("--config is required unless --smoke is given".into())),
    };
    Ok(if smoke { cfg.into_smoke() } else { cfg })
}

fn run(
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    trials: Option<usize>,
    smoke: bool,
) -> Result<(), Error> {
    let mut cfg = load_config(config, smoke)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    let dir = out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ridgelearn-out"));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cfg.kind {
        ExperimentKind::PhaseDiagram => {
            let grid = run_phase_diagram(&cfg)?;
            write_grid_outputs(&grid, &dir)?;
            eprintln!("{} cells written to {}", grid.cells.len(), dir.display());
            Ok(())
        }
        ExperimentKind::ErrorCurve => {
            let curve = run_error_curve(&cfg)?;
            write_curve_outputs(&curve, &dir)?;
            eprintln!("{} rows written to {}", curve.rows.len(), dir.display());
            Ok(())
        }
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::DomainViolation(_) => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed, threads, trials, smoke } => {
            run(config, out, seed, threads, trials, smoke)
        }
        Command::Analyze { op } => analyze(op).map(|s| print!("{s}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

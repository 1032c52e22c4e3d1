//! Seeded generation of sampling points and Bernoulli direction matrices.
//!
//! Every random quantity is drawn from a [`Stream`] obtained with
//! [`derive_stream`]: a ChaCha8 generator keyed by the SHA-256 digest of the
//! master seed and a tuple of labels. Re-deriving the same tuple replays the
//! same draws regardless of how work is scheduled.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::linalg::{norm2, DenseMatrix};

/// Random source used everywhere in the crate.
pub type Stream = ChaCha8Rng;

/// One component of a stream label tuple.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StreamLabel {
    Index(u64),
    Name(String),
}

impl From<u64> for StreamLabel {
    fn from(v: u64) -> Self {
        StreamLabel::Index(v)
    }
}

impl From<usize> for StreamLabel {
    fn from(v: usize) -> Self {
        StreamLabel::Index(v as u64)
    }
}

impl From<u32> for StreamLabel {
    fn from(v: u32) -> Self {
        StreamLabel::Index(u64::from(v))
    }
}

impl From<&str> for StreamLabel {
    fn from(v: &str) -> Self {
        StreamLabel::Name(v.to_owned())
    }
}

impl From<String> for StreamLabel {
    fn from(v: String) -> Self {
        StreamLabel::Name(v)
    }
}

/// Builds a label tuple from heterogeneous values: `labels!["trial", 3usize]`.
#[macro_export]
macro_rules! labels {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::sampling::StreamLabel::from($x)),*]
    };
}

fn digest(master_seed: u64, labels: &[StreamLabel]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"ridgelearn/stream/v1");
    h.update(master_seed.to_le_bytes());
    for label in labels {
        match label {
            StreamLabel::Index(v) => {
                h.update([0u8]);
                h.update(v.to_le_bytes());
            }
            StreamLabel::Name(s) => {
                h.update([1u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
        }
    }
    h.finalize().into()
}

/// Deterministic child stream for `(master_seed, labels)`.
pub fn derive_stream(master_seed: u64, labels: &[StreamLabel]) -> Stream {
    ChaCha8Rng::from_seed(digest(master_seed, labels))
}

/// A 64-bit seed derived the same way as [`derive_stream`].
pub fn derive_seed(master_seed: u64, labels: &[StreamLabel]) -> u64 {
    let d = digest(master_seed, labels);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Where sampling points live and how far finite-difference steps may leave it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Points on the unit sphere; queries allowed in the ball of radius `1 + ε̄`.
    #[default]
    Ball,
    /// Points uniform in `[0,1]^d`; queries allowed in `[-ε̄, 1+ε̄]^d`.
    UnitCube,
}

impl Domain {
    pub fn contains(&self, x: &[f64], bar_eps: f64) -> bool {
        const SLACK: f64 = 1e-9;
        match self {
            Domain::Ball => norm2(x) <= 1.0 + bar_eps + SLACK,
            Domain::UnitCube => x
                .iter()
                .all(|&v| v >= -bar_eps - SLACK && v <= 1.0 + bar_eps + SLACK),
        }
    }

    /// Size of a finite-difference step `ε φ_i` in the norm matching the domain.
    pub fn step_size(&self, d: usize, plan: &SamplingPlan) -> f64 {
        let m = plan.m_phi as f64;
        match self {
            Domain::Ball => plan.epsilon * (d as f64 / m).sqrt(),
            Domain::UnitCube => plan.epsilon / m.sqrt(),
        }
    }

    /// Sampling points of a recovery run, one per row.
    pub fn sample_points(&self, d: usize, m: usize, stream: &mut Stream) -> DenseMatrix {
        match self {
            Domain::Ball => sample_sphere(d, m, stream),
            Domain::UnitCube => sample_cube(d, m, stream),
        }
    }

    /// Test points for sup-norm estimates: uniform in the unit ball or unit cube.
    pub fn sample_test_points(&self, d: usize, m: usize, stream: &mut Stream) -> DenseMatrix {
        match self {
            Domain::Ball => sample_ball(d, m, stream),
            Domain::UnitCube => sample_cube(d, m, stream),
        }
    }
}

/// Query budget geometry of one recovery run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub m_x: usize,
    pub m_phi: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn new(m_x: usize, m_phi: usize, epsilon: f64, seed: u64) -> Self {
        Self {
            m_x,
            m_phi,
            epsilon,
            seed,
        }
    }

    /// Number of oracle queries a sketch built from this plan consumes.
    pub fn query_budget(&self) -> u64 {
        self.m_x as u64 * (self.m_phi as u64 + 1)
    }

    /// Checks the plan against a target of dimension `d` on `domain` with margin `bar_eps`.
    pub fn validate(&self, d: usize, domain: Domain, bar_eps: f64) -> Result<()> {
        if self.m_x == 0 || self.m_phi == 0 {
            return invalid("m_x and m_phi must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        let step = domain.step_size(d, self);
        if step > bar_eps + 1e-12 {
            return invalid(format!(
                "finite-difference step {step:.4} exceeds the domain margin {bar_eps:.4}"
            ));
        }
        Ok(())
    }
}

/// `m_phi × d` matrix with entries `±1/√m_phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionMatrix(DenseMatrix);

impl DirectionMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }

    pub fn m_phi(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }
}

impl AsRef<DenseMatrix> for DirectionMatrix {
    fn as_ref(&self) -> &DenseMatrix {
        &self.0
    }
}

/// `m` points drawn uniformly from the sphere `S^{d-1}`, one per row.
pub fn sample_sphere(d: usize, m: usize, stream: &mut Stream) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m, d);
    for i in 0..m {
        let row = out.row_mut(i);
        loop {
            for v in row.iter_mut() {
                *v = stream.sample(StandardNormal);
            }
            let n = norm2(row);
            if n > 0.0 {
                row.iter_mut().for_each(|v| *v /= n);
                break;
            }
        }
    }
    out
}

/// `m` points uniform in the unit ball of `R^d`.
pub fn sample_ball(d: usize, m: usize, stream: &mut Stream) -> DenseMatrix {
    let mut out = sample_sphere(d, m, stream);
    for i in 0..m {
        let u: f64 = stream.random();
        let r = u.powf(1.0 / d as f64);
        out.row_mut(i).iter_mut().for_each(|v| *v *= r);
    }
    out
}

/// `m` points uniform in `[0,1]^d`.
pub fn sample_cube(d: usize, m: usize, stream: &mut Stream) -> DenseMatrix {
    DenseMatrix::from_fn(m, d, |_, _| stream.random::<f64>())
}

/// Scaled Bernoulli matrix: each entry is `+1/√m_phi` or `-1/√m_phi` with probability 1/2.
pub fn bernoulli_directions(d: usize, m_phi: usize, stream: &mut Stream) -> DirectionMatrix {
    let mag = 1.0 / (m_phi as f64).sqrt();
    let mut data = Vec::with_capacity(m_phi * d);
    let mut bits = 0u64;
    let mut left = 0u32;
    for _ in 0..m_phi * d {
        if left == 0 {
            bits = stream.next_u64();
            left = 64;
        }
        data.push(if bits & 1 == 1 { mag } else { -mag });
        bits >>= 1;
        left -= 1;
    }
    DirectionMatrix(DenseMatrix::new(m_phi, d, data).expect("finite entries"))
}

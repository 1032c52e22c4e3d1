//! Learning ridge functions `f(x) = g(Ax)` in high dimension from point queries.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod l1;
pub mod linalg;
pub mod oracle;
pub mod recovery;
pub mod sampling;

pub use error::{Error, Result};
pub use linalg::{projection_distance, svd, DenseMatrix, SvdResult};
pub use oracle::{ModelSpec, NoiseSpec, RidgeOracle};
pub use sampling::{Domain, SamplingPlan};

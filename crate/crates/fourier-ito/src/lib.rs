//! Mean-square approximation of iterated Itô integrals by generalized
//! multiple Fourier-Legendre series.
//!
//! The crate builds exact rational Fourier-Legendre coefficients of the
//! simplex kernel, evaluates truncated expansions from Gaussian draws,
//! computes exact mean-square errors and bounds, assembles finite-mode
//! Q-Wiener integrals, and checks all of it against a fine-grid Monte Carlo
//! reference.

pub mod coefficients;
pub mod error;
pub mod expansion;
pub mod legendre;
pub mod mc;
pub mod partitions;
pub mod qwiener;
pub mod tables;

pub use coefficients::{CoefficientEngine, CoefficientTensor, KernelNorm, Weight, WeightSpec};
pub use legendre::{Rational, RationalPoly};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported multiplicity {0} (supported: 1 to 6)")]
    UnsupportedMultiplicity(usize),
    #[error("index {index} exceeds the configured maximum {max}")]
    IndexTooLarge { index: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("malformed coefficient database: {0}")]
    Malformed(String),
    #[error("coefficient database version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("unsupported index pattern {0}: use Monte Carlo or the Parseval bound")]
    UnsupportedPattern(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

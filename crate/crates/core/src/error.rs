// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A 1-based site index outside `1..=N`.
    #[error("site index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    /// Iterative numerics failed (eigenvalue convergence, Newton divergence, NaN).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The pole/eigenvector decomposition is too close to defective to yield residues.
    #[error("ill-conditioned decomposition at pole {index}: {detail}")]
    IllConditioned { index: usize, detail: String },

    /// Invalid or unparseable run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

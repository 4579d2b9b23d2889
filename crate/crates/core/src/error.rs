// Copyright 2026 The qouhc Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: at least 2 levels are required")]
    InvalidDimension(usize),

    #[error("invalid inverse temperature {0}: must be finite and positive")]
    InvalidBeta(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("double precision is not admissible for degree {0}; use extended precision")]
    PrecisionMode(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("tail bound did not certify within {0} terms")]
    NonConvergent(usize),

    #[error("no admissible parameters: {0}")]
    InfeasibleParameters(String),

    #[error("truncation dimension {dim} too small for degree {degree}")]
    TruncationTooSmall { degree: usize, dim: usize },

    #[error("vector not represented by the basis span (relative residual {residual:.3e})")]
    SpanInsufficient { residual: f64 },

    #[error("zero input vector")]
    ZeroInput,

    #[error("bisection bracket failure: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBeta(beta))
    }
}

// Copyright 2026 The sslab Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the numerical library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("operator maps basis state {state} outside the restricted Hilbert space")]
    NotClosed { state: usize },

    #[error("symmetry requirement not met: {0}")]
    Symmetry(String),

    #[error("not translation invariant: {0}")]
    NotTranslationInvariant(String),

    #[error(
        "eigensolver did not converge after {iterations} restarts (best residual {residual:e})"
    )]
    Convergence { iterations: usize, residual: f64 },

    #[error("step size error: {0}")]
    StepSize(String),

    #[error("numerical instability: {0}")]
    Instability(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("root finder failed (best residual {residual:e})")]
    RootFinder { residual: f64 },
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

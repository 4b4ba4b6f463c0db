//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode set mismatch: {0}")]
    ModeSetMismatch(String),

    #[error("potential is not real-valued: max sampled imaginary part {0:.3e}")]
    NonRealPotential(f64),

    #[error("matrix is not Hermitian: relative asymmetry {0:.3e}")]
    NotHermitian(f64),

    #[error("resolvent shift too close to the spectrum: |λ + iλ_k| = {0:.3e}")]
    ResolventSingular(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Gramian is not invertible at this truncation (λ_min = {0:.3e})")]
    GramianSingular(f64),

    #[error("enumeration box too small: point touches the search boundary at {0:?}")]
    BoxTooSmall([i64; 2]),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("support incompatibility: {0}")]
    SupportIncompatible(String),

    #[error("numerical postcondition failed: {0}")]
    Numerical(String),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

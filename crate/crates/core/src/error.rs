//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Amplitudes (or an analyzer ket) fail the unit-norm requirement.
    #[error("state is not normalized: |amplitudes|^2 sums to {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    /// Analyzer basis does not match the arm it is applied to.
    #[error("analyzer mismatch: {0}")]
    AnalyzerMismatch(String),

    /// Transfer requested on an arm that is no longer polarization-encoded.
    #[error("invalid transfer: {0}")]
    InvalidTransfer(String),

    /// Mask slit symmetry does not match the mode order.
    #[error("mask symmetry mismatch: mask has 2*{mask_l} slits, mode carries l = {mode_l}")]
    SymmetryMismatch { mask_l: u32, mode_l: u32 },

    /// A parameter is outside its documented range.
    #[error("{field}: {message}")]
    InvalidParameter { field: String, message: String },

    /// Beam waist too small for the pixel pitch to resolve.
    #[error("under-resolved beam: only {pixels:.2} pixels span the 2w beam diameter (need >= 8)")]
    UnderResolved { pixels: f64 },

    /// Two grids that must share geometry do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// No usable intensity found where a signal was expected.
    #[error("no signal: {0}")]
    NoSignal(String),

    /// Least-squares fit could not be performed.
    #[error("fit error: {0}")]
    Fit(String),

    /// Accidental correction requested but singles are absent.
    #[error("cannot correct accidentals: record {index} has no singles counts")]
    MissingSingles { index: usize },

    /// Visibility of two zero projections is undefined.
    #[error("undefined visibility: both projection counts are zero")]
    UndefinedVisibility,

    /// Counts fall outside the invertible band of the fringe.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Malformed count-table input.
    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },

    /// Configuration file rejected.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 validation, 3 runtime/numerical, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotNormalized { .. }
            | Error::AnalyzerMismatch(_)
            | Error::InvalidTransfer(_)
            | Error::SymmetryMismatch { .. }
            | Error::InvalidParameter { .. }
            | Error::MissingSingles { .. }
            | Error::Csv { .. }
            | Error::Config(_) => 2,
            Error::UnderResolved { .. }
            | Error::GridMismatch(_)
            | Error::NoSignal(_)
            | Error::Fit(_)
            | Error::UndefinedVisibility
            | Error::OutOfRange(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

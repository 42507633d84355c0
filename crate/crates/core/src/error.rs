use thiserror::Error;

/// Errors raised by construction, validation and measurement routines.
///
/// Validation failures carry the offending residual so callers can report
/// how far an input is from satisfying the violated invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{what} is not Hermitian (residual {residual:.3e})")]
    NotHermitian { what: String, residual: f64 },

    #[error("{what} is not positive semidefinite (minimum eigenvalue {eigenvalue:.3e})")]
    NotPositive { what: String, eigenvalue: f64 },

    #[error("trace is {trace:.12}, expected 1 (residual {residual:.3e})")]
    NotNormalized { trace: f64, residual: f64 },

    #[error("effects do not sum to the identity (residual {residual:.3e})")]
    Incomplete { residual: f64 },

    #[error("projectors are not mutually orthogonal idempotents (residual {residual:.3e})")]
    NotOrthogonal { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("correction family violates the dilation condition (residual {residual:.3e})")]
    CorrectionCondition { residual: f64 },

    #[error("ancilla state is mixed (purity {purity:.12}); purify it first")]
    MixedAncilla { purity: f64 },

    #[error("outcome {outcome} has zero probability")]
    ZeroProbability { outcome: usize },

    #[error("the two intrinsic-rule evaluations disagree (deviation {deviation:.3e})")]
    PathDisagreement { deviation: f64 },

    #[error("no E-block index convention reproduces the reduced effects (residual {residual:.3e})")]
    NoBlockConvention { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// The numeric residual attached to a validation failure, if any.
    pub fn residual(&self) -> Option<f64> {
        match *self {
            Error::NotHermitian { residual, .. }
            | Error::NotNormalized { residual, .. }
            | Error::Incomplete { residual }
            | Error::NotOrthogonal { residual }
            | Error::NotUnitary { residual }
            | Error::CorrectionCondition { residual }
            | Error::NoBlockConvention { residual } => Some(residual),
            Error::NotPositive { eigenvalue, .. } => Some(eigenvalue),
            Error::PathDisagreement { deviation } => Some(deviation),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

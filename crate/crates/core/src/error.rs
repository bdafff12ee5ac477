use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (entrywise defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("matrix is not an isometry (defect {defect:.3e})")]
    NotIsometry { defect: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("map is not completely positive and trace preserving: {0}")]
    NotCptp(String),

    #[error("invalid Kraus set: {0}")]
    InvalidKraus(String),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {t} outside of [0, {t_f})")]
    OutOfRange { t: f64, t_f: f64 },

    #[error("certification failed at frame {frame:?}: {what} ({value:.6e} > {bound:.6e})")]
    Certification {
        what: String,
        frame: Option<usize>,
        value: f64,
        bound: f64,
    },

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn certification(
        what: impl Into<String>,
        frame: Option<usize>,
        value: f64,
        bound: f64,
    ) -> Self {
        Error::Certification {
            what: what.into(),
            frame,
            value,
            bound,
        }
    }
}

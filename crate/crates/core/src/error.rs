use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} out of range for {modes} modes")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("mode {0} used twice in the same operation")]
    ModeCollision(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("transmissivity {0} outside [0, 1]")]
    InvalidTransmissivity(f64),

    #[error("matrix is not symplectic (deviation {0:.3e})")]
    NotSymplectic(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("state is mixed (det V = {0:.6}); a pure Gaussian state is required")]
    MixedState(f64),

    #[error("occupation {occupation} does not fit below cutoff {cutoff}")]
    OccupationBeyondCutoff { occupation: usize, cutoff: usize },

    #[error("cutoff {cutoff} too small: truncation deficit {deficit:.3e} exceeds {limit:.1e}; increase the cutoff")]
    CutoffTooSmall { cutoff: usize, deficit: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("adaptive policy has no continuation for accepted outcome {0}")]
    MissingPolicyBranch(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("every evaluated branch has zero probability: {0}")]
    ZeroProbability(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for numeric failure, 4 when
    /// nothing can be heralded.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotSymplectic(_)
            | Error::NotUnitary(_)
            | Error::SingularCovariance
            | Error::MixedState(_)
            | Error::CutoffTooSmall { .. }
            | Error::Numeric(_) => 3,
            Error::ZeroProbability(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

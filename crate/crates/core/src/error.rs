use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {abs_error:e})")]
    QuadratureFailure { subdivisions: usize, abs_error: f64 },

    #[error("dispersion vanishes non-integrably at phi = {phi}")]
    CriticalPoint { phi: f64 },

    #[error("two-spin state is not positive: {0}")]
    PositivityViolation(String),

    #[error("Fisher information diverges: outcome {outcome} has probability {probability:e} but derivative {derivative:e}")]
    DivergentInformation {
        outcome: usize,
        probability: f64,
        derivative: f64,
    },

    #[error("saturation undefined: F and H vanish and the one-sided limits {lower} and {upper} disagree")]
    UndefinedSaturation { lower: f64, upper: f64 },

    #[error("feature classification changed under grid refinement ({coarse} vs {fine})")]
    InsufficientResolution { coarse: String, fine: String },

    #[error("integrated QFI profile is flat (relative variation {variation:e})")]
    FlatProfile { variation: f64 },

    #[error("QFI matrix is too ill-conditioned to invert (eigenvalue ratio {ratio:e})")]
    IllConditioned { ratio: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 2,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
            _ => 3,
        }
    }

    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        self.exit_code() == 3
    }
}

pub type Result<T> = std::result::Result<T, Error>;

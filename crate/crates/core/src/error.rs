use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{matrix} violates its structure: relative deviation {deviation:e} exceeds tolerance {tol:e}")]
    StructureViolation {
        matrix: &'static str,
        deviation: f64,
        tol: f64,
    },

    #[error("damping rate of mode {mode} is {value}, must be > 0")]
    NonPositiveDamping { mode: usize, value: f64 },

    #[error("model is not stable (margin {margin:e}); spectra are only defined below threshold")]
    Unstable { margin: f64 },

    #[error("kernel is singular or ill-conditioned at omega = {omega} (condition estimate {condition:e})")]
    SingularKernel { omega: f64, condition: f64 },

    #[error("transfer function split is inconsistent at omega = {omega}: relative residual {residual:e}")]
    SplitMismatch { omega: f64, residual: f64 },

    #[error("no threshold found for pump scale up to {s_max}")]
    NoThresholdFound { s_max: f64 },

    #[error("model is not stable at zero pump (margin {margin:e})")]
    UnstableAtZeroPump { margin: f64 },

    #[error("matrix is not conjugate-symplectic: residual {residual:e}")]
    NotSymplectic { residual: f64 },

    #[error("branch alignment ambiguous between samples {index} and {next}: best overlap {overlap:.3}")]
    AlignmentAmbiguous {
        index: usize,
        next: usize,
        overlap: f64,
    },

    #[error("no squeezing at omega = {omega}: optimal level {optimal_db} dB")]
    NoSqueezing { omega: f64, optimal_db: f64 },

    #[error(
        "verdict {verdict} inconsistent with measured covariance: max relative imaginary part {measured:e} (tol {tol:e})"
    )]
    InconsistentVerdict {
        verdict: String,
        measured: f64,
        tol: f64,
    },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. }
                | Error::SingularKernel { .. }
                | Error::SplitMismatch { .. }
                | Error::NoThresholdFound { .. }
                | Error::UnstableAtZeroPump { .. }
                | Error::NotSymplectic { .. }
                | Error::AlignmentAmbiguous { .. }
                | Error::InconsistentVerdict { .. }
        )
    }
}

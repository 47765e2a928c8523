use std::path::PathBuf;

use thiserror::Error;

use crate::lattice::LatticeField;

pub type Result<T> = std::result::Result<T, DnlsError>;

#[derive(Debug, Error)]
pub enum DnlsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("newton did not converge after {iterations} iterations (residual {residual:.3e}): {reason}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("singular jacobian at row {row}")]
    SingularJacobian { row: usize },

    #[error("continuation stalled at d = {reached_d} (step fell below {min_step:e})")]
    StepFloorReached {
        reached_d: f64,
        min_step: f64,
        last_good: Box<LatticeField>,
    },

    #[error("pulse configuration does not fit on the lattice: {0}")]
    DoesNotFit(String),

    #[error("converged field does not match the requested pulse pattern: {0}")]
    StructureMismatch(String),

    #[error("cannot separate pulse structure: {0}")]
    AmbiguousStructure(String),

    #[error("QR iteration did not converge for eigenvalue index {index}")]
    NoQrConvergence { index: usize },

    #[error("spectrum classification ambiguous: {0}")]
    ClassificationAmbiguous(String),

    #[error("Melnikov sum M = {0} is not positive")]
    MelnikovNonpositive(f64),

    #[error("all abscissae are equal, cannot fit a line")]
    DegenerateAbscissa,

    #[error("study failed: {0}")]
    StudyFailed(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid JSON in {path}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl DnlsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DnlsError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short tag used when a failed row is recorded in study output.
    pub fn tag(&self) -> &'static str {
        match self {
            DnlsError::InvalidParameter(_) => "invalid-parameter",
            DnlsError::NoConvergence { .. } => "no-convergence",
            DnlsError::SingularJacobian { .. } => "singular-jacobian",
            DnlsError::StepFloorReached { .. } => "step-floor",
            DnlsError::DoesNotFit(_) => "does-not-fit",
            DnlsError::StructureMismatch(_) => "structure-mismatch",
            DnlsError::AmbiguousStructure(_) => "ambiguous-structure",
            DnlsError::NoQrConvergence { .. } => "qr-no-convergence",
            DnlsError::ClassificationAmbiguous(_) => "classification-ambiguous",
            DnlsError::MelnikovNonpositive(_) => "melnikov-nonpositive",
            DnlsError::DegenerateAbscissa => "degenerate-abscissa",
            DnlsError::StudyFailed(_) => "study-failed",
            DnlsError::Io { .. } | DnlsError::Json { .. } => "io",
        }
    }
}

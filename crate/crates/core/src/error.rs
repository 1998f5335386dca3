use thiserror::Error;

/// Errors produced by mesh construction, conformal mapping and the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data degenerate (coincident points, collinear triangle, ...).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Ring extension failed at a specific ring of the mesh.
    #[error("ring {ring}: {detail} ({skewed} skewed triangle(s), outer polygon simple: {simple})")]
    RingGeometry {
        ring: usize,
        skewed: usize,
        simple: bool,
        detail: String,
    },

    /// Conformal map construction failed at a specific stage index.
    #[error("zipper stage {stage}: {detail}")]
    ZipperGeometry { stage: usize, detail: String },

    /// Requested data was not retained by the solver's retention policy.
    #[error("retention: {0}")]
    Retention(String),

    /// A normalization step could not be applied (zero vertex image, ...).
    #[error("normalization: {0}")]
    Normalization(String),

    /// Evaluation at or too near a pole.
    #[error("pole: {0}")]
    Pole(String),

    /// An iteration failed to converge within its cap.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the algorithm's geometry (as opposed to bad
    /// configuration or I/O); used by the CLI to pick exit codes.
    pub fn is_geometry(&self) -> bool {
        matches!(
            self,
            Error::RingGeometry { .. } | Error::ZipperGeometry { .. } | Error::Normalization(_)
        )
    }
}

//! Crate-wide error type. Every variant renders as a single line so the CLI
//! can emit machine-parsable diagnostics.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Configuration problem, with the offending key path.
    #[error("config: {path}: {message}")]
    Config { path: String, message: String },

    /// A numeric argument violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The incoming packet overlaps neither slit; both weights underflowed.
    #[error("degenerate transmission: incoming packet overlaps neither slit")]
    DegenerateTransmission,

    /// Detector convolution requested on a grid too coarse for the window.
    #[error("grid too coarse: spacing {spacing_m} m exceeds x0/4 = {limit_m} m")]
    GridTooCoarse { spacing_m: f64, limit_m: f64 },

    /// Visibility analysis found no interior local minimum.
    #[error("no fringes: window contains no interior local minimum")]
    NoFringes,

    /// Wave function amplitude reached the edge of the solver domain.
    #[error(
        "boundary contamination: edge amplitude {edge:.3e} of peak exceeds threshold {limit:.1e}"
    )]
    BoundaryContamination { edge: f64, limit: f64 },

    /// Post-grating state norm fell below the degeneracy threshold.
    #[error("degenerate grating passage: transmitted norm fraction {norm_fraction:.3e}")]
    DegenerateMask { norm_fraction: f64 },

    /// Lobe analysis requested on a state whose lobes overlap at the origin.
    #[error("non-separable lobes: gap amplitude {gap:.3e} of peak exceeds 0.01")]
    NonSeparableLobes { gap: f64 },

    /// Malformed data file.
    #[error("data: line {line}: {message}")]
    Data { line: usize, message: String },

    /// Fit failed to converge within the restart schedule.
    #[error("fit did not converge after {restarts} restarts ({evaluations} evaluations)")]
    FitDidNotConverge { restarts: usize, evaluations: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

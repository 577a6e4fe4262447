use thiserror::Error;

use crate::solver::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    /// Kernel evaluated at (or within round-off of) its singularity.
    #[error("singular evaluation: target coincides with a source point (distance {distance:e})")]
    SingularEvaluation { distance: f64 },

    #[error("operation not supported for the {family} kernel: {what}")]
    UnsupportedFamily { family: &'static str, what: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("point lies on the boundary (distance {distance:e}); inside/outside is undefined")]
    OnBoundary { distance: f64 },

    #[error("target at distance {distance:e} from the expansion center exceeds the evaluation radius {radius:e}")]
    OutsideEvaluationDisc { distance: f64, radius: f64 },

    #[error("check circle of the expansion anchored on panel {panel} comes within {distance:e} of panel {offending} (required clearance {required:e})")]
    CheckClearance {
        panel: usize,
        offending: usize,
        distance: f64,
        required: f64,
    },

    #[error("adaptive refinement could not satisfy admissibility above the minimum panel length {min_length:e}")]
    RefinementFailed { min_length: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("dense size guard: {size} unknowns exceeds the limit of {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("GMRES reached {iterations} iterations without meeting the tolerance (relative residual {residual:e})")]
    MaxIterations {
        iterations: usize,
        residual: f64,
        report: Box<SolveReport>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

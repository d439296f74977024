use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("grid must be non-empty")]
    EmptyGrid,
    #[error("high-resolution grid {hi_height}x{hi_width} is smaller than low-resolution grid {lo_height}x{lo_width}")]
    InvalidScale {
        hi_height: usize,
        hi_width: usize,
        lo_height: usize,
        lo_width: usize,
    },
    #[error("a 1x1 grid has no neighbour edges")]
    DegenerateGraph,
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("solver produced a non-finite value at iteration {iteration}")]
    SolverDiverged { iteration: usize },
    #[error("solver breakdown at iteration {iteration}: non-positive curvature {curvature:e}")]
    SolverBreakdown { iteration: usize, curvature: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dense solve refused: {n} unknowns exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("image is smaller than the {window}x{window} window")]
    ImageTooSmall { window: usize },
    #[error("training aborted after {0} consecutive solver failures")]
    TrainingAborted(usize),
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

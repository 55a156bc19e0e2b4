use thiserror::Error;

/// Errors surfaced by geometric constructions and checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero or near-zero vector where a direction is required")]
    SingularInput,

    #[error("halfspace system is unbounded: normals do not positively span")]
    UnboundedBody,

    #[error("Wulff construction unbounded: directions do not positively span")]
    UnboundedResult,

    #[error("exact enumeration supports dimension <= {max}, got {dim}")]
    DimensionTooHigh { dim: usize, max: usize },

    #[error("degenerate body: fewer than dim+1 vertices")]
    DegenerateBody,

    #[error("halfspace {index} has non-positive offset; the origin must be interior")]
    NonPositiveOffset { index: usize },

    #[error("operation requires the unconditional flag")]
    NotUnconditional,

    #[error("operation requires symmetric bodies")]
    NotSymmetric,

    #[error("weights must sum to 1 within 1e-12, got sum {sum}")]
    WeightSumError { sum: f64 },

    #[error("spherical measure has no mass")]
    EmptyMeasure,

    #[error("no Monte Carlo sample landed inside the body; bounding box mismatch")]
    ZeroHits,

    #[error("intersection volume vanishes on the scan grid")]
    EmptyIntersection,

    #[error("grid functions do not share a lattice: {0}")]
    LatticeMismatch(String),

    #[error("Monte Carlo configuration (samples, seed) required for dim >= 4 volumes")]
    McConfigRequired,

    #[error("product reconstruction failed to reproduce the support profile: {0}")]
    ReconstructionFailed(String),

    #[error("reports do not share a single swept parameter")]
    MixedSweep,

    #[error("numerical failure in linear programming: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

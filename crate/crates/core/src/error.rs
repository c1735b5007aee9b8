use thiserror::Error;

/// Errors raised by the laboratory's operations.
///
/// Every variant is a precondition or input failure; verification outcomes
/// (a failed restoration, a non-envariant verdict) are reported as values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("invalid subsystem index {index} for a system of {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },
    #[error("invalid bipartition: {0}")]
    InvalidCut(String),
    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix is not hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("vectors are not orthonormal (Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("outcome is orthogonal to the state (projection weight {weight:e})")]
    ZeroProjection { weight: f64 },
    #[error("Schmidt coefficient {index} is zero")]
    ZeroCoefficient { index: usize },
    #[error("Schmidt index {index} out of range (rank {rank})")]
    SchmidtIndex { index: usize, rank: usize },
    #[error("subspace is not even (modulus spread {spread:e})")]
    NotEven { spread: f64 },
    #[error("subspace spanned by the new basis is not spanned by Schmidt states")]
    SubspaceMismatch,
    #[error("cannot rationalize with M_max = {max}: need at least {needed}")]
    DenominatorTooSmall { max: u64, needed: u64 },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("apparatus dimension {dim} too small for {outcomes} outcomes plus the ready state")]
    ApparatusTooSmall { dim: usize, outcomes: usize },
    #[error("record events live on different universes ({0} vs {1})")]
    UniverseMismatch(usize, usize),
    #[error("event index {index} outside universe of size {size}")]
    EventIndex { index: usize, size: usize },
    #[error("projector does not commute with the pointer basis (off-diagonal {deviation:e})")]
    NonCommuting { deviation: f64 },
    #[error("partition cells overlap at outcome {0}")]
    OverlappingCells(usize),
    #[error("partition does not cover outcome {0}")]
    UncoveredOutcome(usize),
    #[error("explicit state would need {needed} amplitudes (cap {cap})")]
    SizeCap { needed: u128, cap: u128 },
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("sequence tail is not computable within {0} terms")]
    TailNotComputable(usize),
    #[error("mesh misses {missing:e} of the probability (tolerance {tol:e})")]
    MeshCoverage { missing: f64, tol: f64 },
    #[error("interval [{x1}, {x2}) is invalid or outside the mesh")]
    Interval { x1: f64, x2: f64 },
    #[error("wave function is not declared smooth")]
    Irregular,
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("moment of total degree {requested} requested, provider is reliable only up to {max}")]
    DegreeExceeded { requested: usize, max: usize },

    #[error("moment matrix of degree {degree} is singular")]
    SingularMomentMatrix { degree: usize },

    #[error("Schur complement of degree {degree} is singular")]
    SingularSchur { degree: usize },

    #[error("Schur complement of degree {degree} is nearly singular (|lambda| ratio {ratio:e})")]
    NearSingularSchur { degree: usize, ratio: f64 },

    #[error("recurrence matrix A({degree},{coordinate}) is rank deficient")]
    RankDeficientA { degree: usize, coordinate: usize },

    #[error("recurrence data covers {have} levels, {need} are required")]
    IncompleteRecurrence { have: usize, need: usize },

    #[error("truncated Jacobi matrices of degree {degree} do not commute (relative residual {residual:e})")]
    CommutativityFailed { degree: usize, residual: f64 },

    #[error("joint eigenvector of degree {degree} is defective near point #{index}; suspected multiple zero")]
    DefectiveEigenvector { degree: usize, index: usize },

    #[error("joint eigenpair of degree {degree} fails the per-coordinate check (residual {residual:e})")]
    InconsistentEigenpair { degree: usize, residual: f64 },

    #[error("x_j equals conj(y_j); use the confluent Christoffel-Darboux form")]
    ConfluentRequested,

    #[error("zero set has {found} points, {expected} required")]
    IncompleteZeroSet { found: usize, expected: usize },

    #[error("kernel value K_n(z,z) vanishes at node #{index}")]
    ZeroKernelValue { index: usize },

    #[error("zero set of degree {degree} has non-real points; a real-weight rule does not exist")]
    ComplexNodes { degree: usize },

    #[error("1D rule is insufficient: {0}")]
    Insufficient1DRule(String),

    #[error("exponential-fit Vandermonde matrix is singular (condition {cond:e})")]
    SingularVandermonde { cond: f64 },

    #[error("zero set of degree {degree} contains multiple zeros")]
    MultipleZeros { degree: usize },

    #[error("evaluation point hits a pole in coordinate {coordinate}")]
    PoleHit { coordinate: usize },

    #[error("symmetric polynomial of sign +1/2 evaluated at repeated coordinates")]
    ConfluentPoint,

    #[error("bad weight descriptor: {0}")]
    BadDescriptor(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("level {level}: {source}; the sequence has no associated continued fraction")]
    LevelFailed { level: usize, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

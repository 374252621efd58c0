use thiserror::Error;

use crate::reduction::ReductionReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:e} exceeds tolerance {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is not unitary: residual {residual:e} exceeds tolerance {tol:e}")]
    NotUnitary { residual: f64, tol: f64 },

    #[error("eigenphase {phase} lies within the branch-point guard {guard:e} of +/-pi")]
    PhaseAtBranchPoint { phase: f64, guard: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("path sum over {paths} intermediate configurations exceeds the size guard (n <= 6, m <= 6)")]
    TooLarge { paths: f64 },

    #[error("denominator {denominator:e} is within rounding of a pole at node {node}")]
    PoleProximity { node: f64, denominator: f64 },

    #[error("degenerate interpolation system: {0}")]
    DegenerateSystem(String),

    #[error("duplicate interpolation node at index {first} and {second}")]
    DuplicateNodes { first: usize, second: usize },

    #[error("nodes must be mapped into [-1, 1] before floating-point fitting; found |node| = {max_abs}")]
    NodesNotPreconditioned { max_abs: f64 },

    #[error("need more than k1 + k2 + 2t = {bound} points, got {points}")]
    InsufficientPoints { points: usize, bound: usize },

    #[error("too many errors: {0}")]
    TooManyErrors(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("decoding failed: {}", .0.decode_detail)]
    DecodeFailed(Box<ReductionReport>),

    #[error("precision insufficient: {}", .0.decode_detail)]
    PrecisionInsufficient(Box<ReductionReport>),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

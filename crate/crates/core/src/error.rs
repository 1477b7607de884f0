use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("system must have at least one node")]
    EmptySystem,

    #[error("entry ({row}, {col}) is out of range for a system of dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("off-diagonal entry ({row}, {col}) = {value} is negative; the system is not cooperative")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },

    #[error("entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("edge {from} -> {to} has zero weight")]
    ZeroWeightEdge { from: usize, to: usize },

    #[error("unknown node label `{0}`")]
    UnknownLabel(String),

    #[error("expected {expected} node labels, found {found}")]
    LabelCountMismatch { expected: usize, found: usize },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("matrix is {rows}x{cols}; a square matrix is required")]
    NonSquare { rows: usize, cols: usize },

    #[error("coupling requested with source block {source_block} not upstream of target block {target}")]
    BadBlockOrder { target: usize, source_block: usize },

    #[error("block index {index} out of range (condensation has {count} blocks)")]
    BlockOutOfRange { index: usize, count: usize },

    #[error("power iteration did not converge after {iterations} iterations (last residual {last_residual:e})")]
    NoConvergence { iterations: usize, last_residual: f64 },

    #[error("spectral analysis of block {block} failed: {source}")]
    BlockSpectrum {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("block {0} is super-critical; trivial blocks are only defined without super-critical blocks")]
    SuperCriticalPresent(usize),

    #[error("system is not marginally stable ({0})")]
    NotMarginallyStable(String),

    #[error("linear solve on sub-critical block {0} is singular; the block was likely misclassified near the tolerance")]
    SingularSubCriticalSolve(usize),

    #[error("steady state entry {value:e} on node {node} is negative beyond rounding")]
    NegativeSteadyState { node: usize, value: f64 },

    #[error("path enumeration limited to {limit} blocks, condensation has {blocks}")]
    TooManyBlocks { blocks: usize, limit: usize },

    #[error("block {0} is not a final critical block")]
    NotFinalCritical(usize),

    #[error("dense analysis limited to n <= {limit}, got n = {n}")]
    TooLargeForDense { n: usize, limit: usize },

    #[error("block is not critical (mu = {0:e})")]
    NotCritical(f64),

    #[error("spectral gap {0:e} is too small to certify the limit of the exponential")]
    GapTooSmall(f64),

    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),

    #[error("state vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by model construction, filtering and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("transition matrix must be square with at least 2 states, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to 1 + {deviation:e}, outside tolerance")]
    RowSumViolation { row: usize, deviation: f64 },

    #[error("simplex vector invalid: {0}")]
    NotSimplex(String),

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error("eps = {eps} outside the valid range [0, {max}]")]
    EpsOutOfRange { eps: f64, max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("observation {0} is not in the emission alphabet")]
    UnknownSymbol(f64),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("integral of g_{i} log g_{j} diverges (support mismatch)")]
    Divergent { i: usize, j: usize },

    #[error("zero likelihood at step {step}: observation has no support under the current filter")]
    ZeroLikelihood { step: u64 },

    #[error("initial distributions coincide; the wedge product vanishes")]
    DegenerateWedge,

    #[error("only {usable} usable steps before underflow (need at least {required})")]
    HorizonTooShort { usable: usize, required: usize },

    #[error("cannot split {len} samples into {batches} equal batches (need >= 20 batches)")]
    BadPartition { len: usize, batches: usize },

    #[error("state partition invalid: {0}")]
    InvalidPartition(String),

    #[error("operation requires discrete emission noise")]
    NotDiscrete,

    #[error("operation requires Gaussian noise")]
    NotGaussian,

    #[error("operation requires d = {expected}, got d = {got}")]
    WrongDimension { expected: usize, got: usize },

    #[error("flip probability {0} outside (0, 1/2)")]
    POutOfRange(f64),

    #[error("every divergence from state {state} to the others is infinite")]
    DivergentEntropy { state: usize },

    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("test operator has eigenvalue {eigenvalue} outside [0, 1]")]
    NotATest { eigenvalue: f64 },
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative power requested on an operator with kernel (eigenvalue {eigenvalue:e})")]
    NegativePowerOfKernel { eigenvalue: f64 },
    #[error("support condition violated: {0}")]
    SupportViolation(String),
    #[error("epsilon {0} outside [0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("negative rate {0}")]
    NegativeRate(f64),
    #[error("rate {rate} is below the divergence {divergence}")]
    RateBelowDivergence { rate: f64, divergence: f64 },
    #[error("rate {rate} unreachable by the tilted family (sup over s <= {s_cap} is {reached})")]
    RateUnreachable { rate: f64, reached: f64, s_cap: f64 },
    #[error("tilted family is degenerate (log-likelihood ratio is constant on the support)")]
    DegenerateFamily,
    #[error("expectation mismatch: E[log p/q] = {expected}, eta(t) = {got}")]
    ExpectationMismatch { expected: f64, got: f64 },
    #[error("type classes ({count}) exceed cap {cap}")]
    TypeCapExceeded { count: usize, cap: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("parse error: {0}")]
    Parse(String),
}

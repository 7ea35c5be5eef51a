use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("prior covariance not positive-definite")]
    PriorNotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("label arity changed: expected {expected}, got {got}")]
    LabelArityMismatch { expected: usize, got: usize },

    #[error("non-finite feature entry at position {0}")]
    NonFiniteFeature(usize),

    #[error("pool exhausted")]
    PoolExhausted,

    #[error("design not identifiable")]
    DesignNotIdentifiable,

    #[error("d-optimal solver did not converge: best certificate {certificate}, target {target}")]
    DesignNotConverged { certificate: f64, target: f64 },

    #[error("oracle cannot simulate predictions")]
    NoPredictiveSampling,

    #[error("replay oracle has no label for the given features")]
    UnknownReplayFeatures,

    #[error("oracle failure for candidate {candidate} in round {round}: {source}")]
    OracleFailure {
        candidate: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("remote predictor transport error: {0}")]
    RemoteTransport(String),

    #[error("remote predictor protocol error: {0}")]
    RemoteProtocol(String),

    #[error("instance construction infeasible: {0}")]
    InfeasibleInstance(String),

    #[error("combinatorial guard exceeded: C({n}, {t}) > {limit}; use a smaller instance")]
    CombinatorialGuard { n: usize, t: usize, limit: u64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("zero-norm row {0} cannot be unit-normalized")]
    ZeroNormRow(usize),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

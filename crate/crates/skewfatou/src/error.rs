use thiserror::Error;

/// Errors shared across the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("jet order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("singular linear system")]
    SingularSystem,
    #[error("division by zero")]
    DivisionByZero,
    #[error("g(0,0) != 0: map is not normalized at the origin")]
    NotNormalized,
    #[error("fixed point is not repelling (|p'| <= 1)")]
    NotRepelling,
    #[error("no critical orbit lands on the fixed point within k_max = {0}")]
    NotCriticallyFinite(usize),
    #[error("map is not resonant: mu != 1/lambda")]
    NotResonant,
    #[error("split form g = p(z) + q(t) required")]
    NotSplit,
    #[error("degenerate sample set: fitting system is singular")]
    DegenerateSamples,
    #[error("the affine coefficient of b in X1 vanishes; no degenerate form")]
    NoDegenerateForm,
    #[error("no convergence within n_max = {n_max}; log2 diffs: {diffs_log2:?}")]
    NoConvergence { n_max: u64, diffs_log2: Vec<f64> },
    #[error("differences fell below working precision")]
    PrecisionExhausted,
    #[error("orbit escaped bailout at step {0}")]
    Escaped(usize),
    #[error("pullback exceeded k_max; w outside evaluable domain")]
    OutOfDomain,
    #[error("target value not found in search region")]
    NotFound,
    #[error("backward chain verification failed at index {0}")]
    InconsistentOrbit(usize),
    #[error("no bounded start found on the sampling segment")]
    EscapedOrbit,
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

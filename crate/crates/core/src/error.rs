use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("edge `{edge}` references unknown vertex `{vertex}`")]
    UnknownEndpoint { edge: String, vertex: String },
    #[error("edge `{edge}` has invalid length {length} (must be positive and finite)")]
    InvalidLength { edge: String, length: f64 },
    #[error("vertex `{0}` has no incident edges")]
    IsolatedVertex(String),
    #[error("graph must have at least one vertex and one edge")]
    EmptyGraph,
    #[error("unknown vertex index {0}")]
    UnknownVertex(usize),
    #[error("unknown edge index {0}")]
    UnknownEdge(usize),
    #[error("split position {position} outside (0, {length})")]
    SplitOutOfRange { position: f64, length: f64 },

    #[error("invalid vertex conditions: {0}")]
    InvalidConditions(String),
    #[error("delta coupling must be nonzero (delta(0) is Kirchhoff)")]
    ZeroDeltaCoupling,
    #[error("vertex `{vertex}` has degree {degree} but its conditions have size {size}")]
    DegreeMismatch { vertex: String, degree: usize, size: usize },
    #[error("(A, B) does not define self-adjoint conditions: {0}")]
    NotSelfAdjoint(String),
    #[error("operation requires scale-invariant conditions (no Robin part)")]
    NotScaleInvariant,

    #[error("frequency k must be nonzero for conditions with a Robin part")]
    ZeroFrequency,
    #[error("A + ikB is singular at k = {0}")]
    SingularScattering(f64),

    #[error("k_max must be positive, got {0}")]
    InvalidKmax(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("root counting failed near k = {k}: {reason}")]
    RootCounting { k: f64, reason: String },
    #[error("winding number did not converge to an integer (last estimate {0})")]
    WindingNotInteger(f64),
    #[error("secular function is badly conditioned on the contour: {0}")]
    Conditioning(String),

    #[error("t must be positive, got {0}")]
    InvalidTime(f64),
    #[error("spectrum computed up to k = {have}, need k_max >= {need} for t = {t}")]
    InsufficientKmax { have: f64, need: f64, t: f64 },
    #[error("walk enumeration exceeded {limit} classes; lower the cutoff")]
    TooManyWalks { limit: usize },
    #[error("cutoff {cutoff} too small: truncation bound {bound:e} exceeds tolerance {tolerance:e}")]
    CutoffTooSmall { cutoff: f64, bound: f64, tolerance: f64 },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("consistency check failed: {0}")]
    Inconsistent(String),
}

use thiserror::Error;

/// Broad failure category, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Solver,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },

    #[error("invalid interval: r1 = {r1} must be positive and below r2 = {r2}")]
    InvalidInterval { r1: f64, r2: f64 },

    #[error("invalid xi = {0}: must lie in [0, 1]")]
    InvalidXi(f64),

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("radius search failed: objective still decreasing at r = {edge} (bracket [{lo}, {hi}])")]
    BracketFailure { lo: f64, hi: f64, edge: f64 },

    #[error("eps = {eps} too large: barrier eta = {eta} is not below 1")]
    EpsTooLarge { eps: f64, eta: f64 },

    #[error("eps = {eps} under-resolved: needs at least twice the grid spacing {h}")]
    EpsUnderResolved { eps: f64, h: f64 },

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("incompatible right-hand side: discrete source mass {0} is not zero")]
    IncompatibleRhs(f64),

    #[error("measure violates Kirchhoff's law at {count} point(s); first at {first:?}")]
    KirchhoffViolation { count: usize, first: Vec<f64> },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("transition profile exceeds q_inf + delta: {energy} > {limit}")]
    ProfileSlack { energy: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonConvergence { .. }
            | Error::BracketFailure { .. }
            | Error::ProfileSlack { .. } => ErrorKind::Solver,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("pump amplitude is zero for every chaotic mode (a_n * E0 = 0)")]
    ZeroPump,

    #[error("coupling matrix is singular; degenerate parameter set")]
    SingularMatrix,

    #[error("step-size control failed at t = {t:e} (h = {h:e})")]
    StiffnessFailure { t: f64, h: f64 },

    #[error("interference series diverges: G = {g} >= 1")]
    DivergentSeries { g: f64 },

    #[error("overlap factor beta_p must be positive, got {beta_p}")]
    InvalidOverlap { beta_p: f64 },

    #[error("no root for epsilon(0) = {epsilon0}: attainable range is [{min}, {max}]")]
    NoRoot { epsilon0: f64, min: f64, max: f64 },

    #[error("two positive roots for G: {roots:?}")]
    AmbiguousRoot { roots: [f64; 2] },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("no ray escaped the cavity")]
    AllConfined,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}

use std::fmt;

/// Errors raised by the geometry, kernel, sampler and estimator layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent or out-of-range model parameters (curvature mismatch, bad dimension).
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A tangent vector that should be unit is not.
    #[error("normalization error: {0}")]
    Normalization(String),
    /// Gromov product of a boundary point with itself.
    #[error("infinite Gromov product: boundary points coincide")]
    InfiniteProduct,
    /// Argument outside the domain of the function (Im z <= 0, t <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Radius beyond the tabulated range of a warped model.
    #[error("range error: r = {r} exceeds r_max = {r_max}")]
    Range { r: f64, r_max: f64 },
    /// Evaluation at a coordinate singularity (pole of polar coordinates, pole of G).
    #[error("singularity: {0}")]
    Singularity(String),
    /// Quadrature or root finding failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Operation needs a closed form that the model does not provide.
    #[error("unsupported model: {0}")]
    Unsupported(String),
    /// Invalid experiment or simulation configuration.
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl fmt::Display) -> Self {
        Error::Parameter(msg.to_string())
    }

    pub(crate) fn config(msg: impl fmt::Display) -> Self {
        Error::Config(msg.to_string())
    }

    pub(crate) fn numeric(msg: impl fmt::Display) -> Self {
        Error::Numeric(msg.to_string())
    }

    pub(crate) fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }
}

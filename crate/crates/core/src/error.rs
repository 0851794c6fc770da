use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// `w` or `w^s` is not integrable on the named interval.
    #[error("diverged integral of {what} on [{lo}, {hi})")]
    DivergedIntegral { what: String, lo: f64, hi: f64 },

    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("no dyadic cover of [{lo}, {hi}) within factor {factor}")]
    NoCover { lo: f64, hi: f64, factor: f64 },

    #[error("infeasible size: {0}")]
    Infeasible(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("config serialize error: {0}")]
    ConfigSerialize(#[from] toml::ser::Error),
}

impl LabError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        LabError::InvalidConfiguration(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        LabError::InvalidParameter(msg.into())
    }
}

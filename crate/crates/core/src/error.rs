use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An experiment or file configuration is invalid. `key` names the field.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// The two conditional means coincide, so the log-prior term is undefined.
    #[error("optimal threshold undefined: conditional means are equal ({0})")]
    SingularThreshold(f64),

    /// The requested SINR cannot be produced by any non-negative noise power.
    #[error("target SINR {target} unreachable; the noise-free ceiling is {ceiling}")]
    UnreachableSinr { target: f64, ceiling: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

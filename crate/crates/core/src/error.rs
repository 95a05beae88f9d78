use alloc::string::String;

/// Errors raised by model construction, likelihood evaluation and sampling.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the support of a density.
    #[error("{what} = {value} is outside the support")]
    Domain { what: &'static str, value: f64 },
    /// A distribution or model parameter is invalid.
    #[error("invalid parameter {what} = {value}")]
    Parameter { what: &'static str, value: f64 },
    /// Inputs whose shapes or bookkeeping do not fit together.
    #[error("structural error: {0}")]
    Structure(String),
    /// The sampler could not find a starting point with finite log-posterior.
    #[error("no finite initial log-posterior after {attempts} attempts")]
    Initialization { attempts: usize },
    /// An invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn structure(msg: impl Into<String>) -> Error {
    Error::Structure(msg.into())
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates a domain invariant. `param` names the offending input.
    #[error("invalid `{param}`: {reason}")]
    Domain { param: &'static str, reason: String },

    /// The least-squares engine could not produce a result.
    #[error("fit failed: {0}")]
    Fit(String),

    /// A requested quantity is undefined for the given data (e.g. g2 without
    /// any distinct-pulse coincidences).
    #[error("undefined result: {0}")]
    Undefined(String),

    /// A simulation would exceed a resource limit.
    #[error("resource guard: {0}")]
    ResourceGuard(String),
}

impl Error {
    pub(crate) fn domain(param: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            param,
            reason: reason.into(),
        }
    }
}

/// Fails with a domain error unless `cond` holds.
pub(crate) fn ensure(cond: bool, param: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::domain(param, reason))
    }
}

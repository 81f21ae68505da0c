use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("point outside the collar neighbourhood: {0}")]
    Collar(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("step leaves the chart: {0}")]
    Chart(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name.to_string()))
    }
}

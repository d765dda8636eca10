use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("amplitude pole hit at k = {re} + {im}i")]
    Pole { re: f64, im: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),

    #[error("vanishing norm ({0:e}); moment is undefined")]
    VanishingNorm(f64),

    #[error("logarithmic derivative ill-posed: |amplitude| = {0:e}")]
    AmplitudeUnderflow(f64),

    #[error("{0} is not supported for this potential")]
    Unsupported(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

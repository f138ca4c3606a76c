use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Catastrophic cancellation sentinel: an alternating sum produced
    /// intermediate terms so much larger than the result that the f64
    /// evaluation is untrustworthy.
    #[error("loss of precision: intermediate terms exceed the result by a factor of {ratio:.3e}")]
    PrecisionLoss { ratio: f64 },

    #[error("bound inapplicable: requires p < 1/2, got p = {p}")]
    BoundInapplicable { p: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("time delay {delay} s of element {index} outside [0, {max}] s")]
    DelayOutOfRange { index: usize, delay: f64, max: f64 },

    #[error("element {index} has modulus {modulus}, expected unit modulus")]
    NotUnitModulus { index: usize, modulus: f64 },

    #[error("threshold {tau} outside the assumed range [{lo}, {hi}]")]
    ThresholdOutOfRange { tau: f64, lo: f64, hi: f64 },

    #[error("log-MGF domain violated: psi * sigma_tilde^2 = {product} (must be < 1)")]
    MgfDomain { product: f64 },

    #[error("zero vector where a nonzero direction is required")]
    ZeroDirection,

    #[error("covert constraints could not be restored: max violation {violation:e}")]
    InfeasibleStart { violation: f64 },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

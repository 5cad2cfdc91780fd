use thiserror::Error;

/// Errors raised by the geometry, sampling, and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("empty sample")]
    EmptySample,

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("sample has zero variance")]
    ZeroVariance,

    #[error("sample too small: need at least {needed} values, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("grid contains z = 0, where the volume-scale density is singular")]
    ZeroGridPoint,

    #[error("size distribution has infinite or non-positive mean")]
    InfiniteMean,

    #[error("step distribution has an atom at a non-positive location")]
    ZeroLocation,

    #[error("observation {index} (s = {value}) has zero density under every atom")]
    AllZeroLikelihood { index: usize, value: f64 },

    #[error("argument {value} outside support [{lo}, {hi}]")]
    OutOfSupport { value: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateInput(_) => "DegenerateInput",
            Error::InvalidBody(_) => "InvalidBody",
            Error::EmptySample => "EmptySample",
            Error::NonPositiveBandwidth(_) => "NonPositiveBandwidth",
            Error::ZeroVariance => "ZeroVariance",
            Error::SampleTooSmall { .. } => "SampleTooSmall",
            Error::ZeroGridPoint => "ZeroGridPoint",
            Error::InfiniteMean => "InfiniteMean",
            Error::ZeroLocation => "ZeroLocation",
            Error::AllZeroLikelihood { .. } => "AllZeroLikelihood",
            Error::OutOfSupport { .. } => "OutOfSupport",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pulse spectrum not covered at index k={0}")]
    SpectrumNotCovered(i64),

    #[error("vanishing pulse spectrum at index k={0}")]
    VanishingSpectrum(i64),

    #[error("Dirac pulse streams are not pointwise evaluable")]
    NotPointwiseEvaluable,

    #[error("bias b={b} does not exceed the signal bound c={c}")]
    BiasBelowBound { b: f64, c: f64 },

    #[error("guaranteed firing rate (b-c)/(κδ) = {min_rate} is below the (2K+2)/T = {required} firings per period needed for recovery")]
    RateBelowRequired { min_rate: f64, required: f64 },

    #[error("unordered firings: instant {index} is not strictly after its predecessor")]
    UnorderedFirings { index: usize },

    #[error("firing window spans {span} s, which exceeds one period T={period} s")]
    WindowExceedsPeriod { span: f64, period: f64 },

    #[error("insufficient firings: got N={got}, recovery needs N >= 2K+2 = {required} spike times in one period")]
    InsufficientFirings { got: usize, required: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient consecutive coefficients: need {needed}, longest run has {available}")]
    InsufficientConsecutive { needed: usize, available: usize },

    #[error("model order mismatch: annihilation system is rank deficient for L={0}")]
    ModelOrderMismatch(usize),

    #[error("off-grid recovery without the DC component needs K >= 2L (K={k}, L={l})")]
    OffGridOrder { k: usize, l: usize },

    #[error("pulse has infinite or unknown support")]
    InfiniteSupport,

    #[error("true signal has zero norm")]
    ZeroNorm,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by violated sampling or recovery preconditions,
    /// as opposed to malformed input.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::BiasBelowBound { .. }
                | Error::RateBelowRequired { .. }
                | Error::InsufficientFirings { .. }
                | Error::WindowExceedsPeriod { .. }
                | Error::InsufficientConsecutive { .. }
                | Error::ModelOrderMismatch(_)
                | Error::OffGridOrder { .. }
                | Error::VanishingSpectrum(_)
                | Error::SpectrumNotCovered(_)
                | Error::Numerical(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

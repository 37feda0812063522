use thiserror::Error;

/// Errors produced anywhere in the link model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bit vector of length {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitLength { len: usize, bits_per_symbol: usize },

    #[error("expected {expected} QAM symbols for this frame layout, got {got}")]
    SymbolCount { expected: usize, got: usize },

    #[error("frequency frame is not Hermitian at bin {bin} (mismatch {mismatch:.3e})")]
    NotHermitian { bin: usize, mismatch: f64 },

    #[error("expected a frame of length {expected}, got {got}")]
    FrameLength { expected: usize, got: usize },

    #[error("frame is in stage {found:?}, operation requires {required:?}")]
    WrongStage {
        found: crate::ofdm::Stage,
        required: crate::ofdm::Stage,
    },

    #[error("frame mean is not positive; cannot normalise")]
    DegenerateFrame,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("received optical power must be non-negative, got {0} W")]
    NegativePower(f64),

    #[error(
        "dead time {dead_time:e} s must be shorter than the symbol period {symbol_period:e} s"
    )]
    DeadTimeExceedsSymbol { dead_time: f64, symbol_period: f64 },

    #[error("count distribution is numerically unstable at count {index} (value {value:.3e})")]
    NumericalInstability { index: usize, value: f64 },

    #[error("count support of {required} exceeds the limit of {limit}")]
    SupportOverflow { required: usize, limit: usize },

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("distortion variance {value:.3e} is negative beyond round-off (E[z^2] = {scale:.3e})")]
    InconsistentDistortion { value: f64, scale: f64 },

    #[error("E[N^2] must be positive for the Bussgang decomposition")]
    ZeroInputPower,

    #[error("the pilot did not observe a positive photon-to-amplitude gain")]
    NoSignal,

    #[error("the clipping model only applies to DCO-OFDM")]
    NotDco,

    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalInstability { .. }
                | Error::SupportOverflow { .. }
                | Error::QuadratureNonConvergence { .. }
                | Error::InconsistentDistortion { .. }
        )
    }
}

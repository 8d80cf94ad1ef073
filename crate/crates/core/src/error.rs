use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid buffer: {0}")]
    InvalidBuffer(&'static str),
    #[error("empty input")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("data has no variance")]
    NoVariance,
    #[error("matrix is singular")]
    Singular,
    #[error("histograms use different binnings")]
    BinningMismatch,
    #[error("decimation factor must be at least 1, got {0}")]
    InvalidFactor(usize),
    #[error("window of {window} samples is longer than the {len}-sample signal")]
    WindowTooLong { window: usize, len: usize },
    #[error("signal too short: need {needed} samples, got {actual}")]
    TooShort { needed: usize, actual: usize },
    #[error("histogram is empty")]
    EmptyHistogram,
}

/// Non-fatal conditions. Operations that hit one of these still return a
/// best-effort result and report the condition alongside it.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Fewer components than requested carry variance; `retained` was clamped.
    RankDeficient { requested: usize, rank: usize },
    /// The fourth-order contrast has no usable structure (Gaussian or
    /// linearly dependent rows).
    DegenerateContrast,
    /// Fewer samples than recommended for histogram density estimates.
    InsufficientData { samples: usize, recommended: usize },
    /// Output samples were clipped into [-1, 1].
    Clipped { samples: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::RankDeficient { requested, rank } => {
                write!(f, "rank deficient: requested {requested} components, numerical rank {rank}")
            }
            Warning::DegenerateContrast => f.write_str("degenerate fourth-order contrast"),
            Warning::InsufficientData { samples, recommended } => {
                write!(f, "only {samples} samples for a density estimate (recommended {recommended})")
            }
            Warning::Clipped { samples } => write!(f, "{samples} samples clipped"),
        }
    }
}

pub(crate) fn warn(w: Warning) -> Warning {
    log::warn!("{w}");
    w
}

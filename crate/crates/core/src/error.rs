use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty mixture")]
    EmptyMixture,

    #[error("invalid snr {0}: must be finite and non-negative")]
    InvalidSnr(f64),

    #[error("quadrature order {0} is below the minimum of 2")]
    QuadratureOrder(usize),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("unsupported constellation: {0}")]
    UnsupportedConstellation(String),

    #[error("alphabet too large: {size} points exceeds cap {cap}")]
    AlphabetTooLarge { size: usize, cap: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("alphabet of {0} points is too large for 2-D quadrature; use mmse_mimo_mc")]
    QuadratureAlphabetTooLarge(usize),

    #[error("lower bound derived for equiprobable inputs")]
    NonUniformPrior,

    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid snr grid: {0}")]
    InvalidGrid(String),

    #[error("increase tail cap: bound integrand {integrand:e} at cap {cap} exceeds {threshold:e}")]
    TailCapTooSmall {
        cap: f64,
        integrand: f64,
        threshold: f64,
    },

    #[error("window too high; lower snr range ({0})")]
    NonPositiveGap(String),

    #[error("invalid fit window: {0}")]
    InvalidWindow(String),

    #[error("{field}: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

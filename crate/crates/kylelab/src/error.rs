use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid distribution spec: {0}")]
    InvalidDistribution(String),

    #[error("invalid signal model: {0}")]
    InvalidModel(String),

    #[error("varying noise intensity requires the explicit override flag")]
    VaryingSigma,

    #[error("matrix is not positive semidefinite: eigenvalue {0} below tolerance")]
    NotPsd(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("signal count must be at least 2, got {0}")]
    TooFewSignals(usize),

    #[error("equilibrium bracket not found: Phi still positive at alpha = {0}")]
    BracketNotFound(f64),

    #[error("pivot strike {k0} outside the open grid interior ({lo}, {hi})")]
    PivotOutsideGrid { k0: f64, lo: f64, hi: f64 },

    #[error("strike {0} outside the state grid")]
    StrikeOutsideGrid(f64),

    #[error("option price {price} violates arbitrage bounds [{lower}, {upper}]")]
    PriceOutsideBounds { price: f64, lower: f64, upper: f64 },

    #[error("test portfolio is not orthogonal to belief {index}: overlap {overlap}")]
    NotOrthogonal { index: usize, overlap: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("failed to parse JSON config: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

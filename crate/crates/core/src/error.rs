use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dichroic parameter must be nonnegative, got {0}")]
    NegativeDichroism(f64),

    #[error("global attenuation exponent must be nonnegative, got {0}")]
    NegativeAttenuation(f64),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("quasi-momentum grid is empty")]
    EmptyGrid,

    #[error("momentum grid with {got} samples would alias; need at least {required}")]
    AliasedGrid { required: usize, got: usize },

    #[error("walker extinct: survival weight {0:e} is below the absorption threshold")]
    ExtinctWalker(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("power-law fit refused: {0}")]
    FitRefused(String),

    #[error("calibration sample '{label}': {reason}")]
    InvalidSample { label: String, reason: String },

    #[error("inconsistent input power: extracted attenuation exponent {0:e} is negative")]
    InconsistentReference(f64),

    #[error("plate table '{table}' has no row for voltage '{voltage}'")]
    MissingVoltage { table: String, voltage: String },

    #[error("invalid plate table: {0}")]
    InvalidTable(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

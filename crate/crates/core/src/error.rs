use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate conditional density at ancillary value {t}: {reason}")]
    DegenerateConditional { t: f64, reason: String },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("no sign change of the first-order equation in [{lo}, {hi}] after {expansions} expansions")]
    NoSignChange { lo: f64, hi: f64, expansions: usize },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("insufficient support: {0}")]
    InsufficientSupport(String),

    #[error("inconsistent monotonicity: {0}")]
    Inconsistent(String),

    #[error("invalid bounds at t = {t}: lower {lower} exceeds upper {upper}")]
    InvalidBounds { t: f64, lower: f64, upper: f64 },

    #[error("unknown catalog key: {0}")]
    UnknownKey(String),

    #[error("estimator does not exist: {0}")]
    Nonexistent(String),

    #[error("incompatible estimators: {0}")]
    Incompatible(String),

    #[error("loss overflow at replicate {replicate}: {detail}")]
    Overflow { replicate: u64, detail: String },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use thiserror::Error;

/// Errors raised anywhere in the simulation chain or the distribution theory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate input: {0}")]
    Degeneracy(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance (estimated error {estimate:e}, value {value:e})")]
    Accuracy { value: f64, estimate: f64 },

    #[error("codebook of 2^{bits} entries exceeds the {limit}-bit guard")]
    Capacity { bits: u32, limit: u32 },

    #[error("need at least {needed} users, have {have}")]
    InsufficientUsers { needed: usize, have: usize },

    #[error("x = {x} is below the support threshold {x_min} of the closed form")]
    Support { x: f64, x_min: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("not enough samples for a meaningful statistic: {have} < {needed}")]
    StatisticalPower { needed: usize, have: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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

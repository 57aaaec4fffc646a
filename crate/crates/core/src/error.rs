use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// An argument is malformed (non-positive tolerance, zero width, ...).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A documented precondition on the input data does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A multiplier or operator contract was broken.
    #[error("contract violated: {0}")]
    Contract(String),
    /// Two particles met or crossed: `m + (G_m r)_j <= 0`.
    #[error("particle collision at site {site} (window {window}, separation {separation})")]
    Collision {
        site: usize,
        window: usize,
        separation: f64,
    },
    /// The state stopped being finite during time stepping.
    #[error("numerical blow-up at time {time}")]
    BlowUp { time: f64 },
    /// Experiment description is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// An internal consistency check failed.
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

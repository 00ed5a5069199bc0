use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Array lengths or indices that do not fit the declared step count.
    #[error("structural error: {0}")]
    Structural(String),

    /// An argument outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Floating-point evaluation lost too much precision to be trusted.
    #[error("accuracy loss: {what} (cancellation index {cancellation_index:.3e})")]
    AccuracyLoss {
        what: String,
        cancellation_index: f64,
    },

    /// A request whose cost exceeds the supported budget.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Spatial grid unsuitable for the requested evolution.
    #[error("grid error: {0}")]
    Grid(String),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Real part of an argument outside the smooth domain of `what`.
    #[error("{what}: argument {value} outside the supported domain")]
    Domain { what: &'static str, value: f64 },

    /// A transformed landmark at or behind the depth guard.
    #[error("landmark {index} has camera depth {depth}, at or below the guard")]
    Depth { index: usize, depth: f64 },

    /// A derivative extraction produced NaN or infinite entries.
    #[error("{count} non-finite entries in the extracted derivative")]
    NonFinite { count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),
}

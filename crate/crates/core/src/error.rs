use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("horizon of {0} slots exceeds the supported maximum of 2^62 - 1")]
    HorizonOverflow(u64),

    #[error("initial condition has {found} entries but the system has {expected} servers")]
    InitLength { expected: usize, found: usize },

    #[error("exact enumeration of {bits} indicator bits exceeds the budget of {budget}")]
    EnumerationBudget { bits: u32, budget: u32 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("could not bracket a root of {0}")]
    BracketFailure(&'static str),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument is outside its domain.
    #[error("invalid {name}: {value} ({reason})")]
    InvalidArgument {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A simulation or scenario configuration failed validation.
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown pool `{0}`")]
    UnknownPool(String),

    #[error("all candidate powers are zero")]
    ZeroPower,

    #[error("pool has revenue {revenue_sat} sat but no shares to divide it over")]
    NoShares { revenue_sat: u64 },

    #[error("expected block count is zero but {observed} blocks were observed")]
    ZeroExpectation { observed: u64 },

    #[error("malformed block DAG: {0}")]
    MalformedDag(String),

    #[error("pool `{0}` does not pay per share")]
    NotPps(String),

    #[error("selfish state machine: {0}")]
    InvalidTransition(&'static str),

    #[error("unknown formula `{name}`; available: {available}")]
    UnknownFormula { name: String, available: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidArgument {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

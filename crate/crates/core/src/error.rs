use thiserror::Error;

/// Errors surfaced by community generation, scheduling and scenario handling.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is invalid. `path` names the offending field.
    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(
        "customer {customer} has {count} {what} devices, more than the order-enumeration limit of {limit}; sample device orders instead"
    )]
    TooManyDevices {
        customer: usize,
        what: &'static str,
        count: usize,
        limit: usize,
    },

    /// A final schedule broke one of the engagement constraints.
    #[error("constraint violation ({constraint}) at customer {customer}, device {device}, slot {slot}: {detail}")]
    ConstraintViolation {
        constraint: &'static str,
        customer: usize,
        device: String,
        slot: usize,
        detail: String,
    },

    #[error(
        "thermostat control did not converge for customer {customer}, device {device}: severity bound unreachable even at full power"
    )]
    NonConvergence { customer: usize, device: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

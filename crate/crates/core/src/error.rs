use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mass at index {index} is not positive")]
    NonPositiveMass { index: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("index {index} out of range (expected 1..={max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ordering violated between particles {left} and {right} after advance")]
    OrderingViolated { left: usize, right: usize },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("inconsistent result: {0}")]
    Inconsistent(String),

    #[error("oracle step-size violation near t = {time}")]
    OracleStep { time: f64 },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("invalid value for field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable identifier for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonPositiveMass { .. } => "non_positive_mass",
            Error::InvalidState(_) => "invalid_state",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::Domain(_) => "domain",
            Error::OrderingViolated { .. } => "ordering_violated",
            Error::Construction(_) => "construction",
            Error::Inconsistent(_) => "inconsistent",
            Error::OracleStep { .. } => "oracle_step",
            Error::Incompatible(_) => "incompatible",
            Error::Field { .. } => "schema",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }

    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}

use pmi_sos::Error;
use thiserror::Error;

/// Exit status 2: the input was rejected.
pub const EXIT_INPUT: u8 = 2;
/// Exit status 3: the harness itself failed.
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{code}: {message}")]
    Input { code: &'static str, message: String },
    #[error("INTERNAL: {0}")]
    Internal(String),
}

impl CliError {
    pub fn input(code: &'static str, message: impl Into<String>) -> Self {
        CliError::Input { code, message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input { .. } => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (code, message) = match self {
            CliError::Input { code, message } => (*code, message.as_str()),
            CliError::Internal(m) => ("INTERNAL", m.as_str()),
        };
        serde_json::json!({"error": {"code": code, "message": message, "exit_code": self.exit_code()}})
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) | Error::Json(_) => "INSTANCE_PARSE",
            Error::DimensionMismatch { .. } => "INSTANCE_INVALID",
            Error::Unnormalized { .. } => "UNNORMALIZED",
            Error::OrderTooSmall { .. } | Error::DegreeExceedsOrder { .. } => "ORDER_TOO_SMALL",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::EmptyFeasibleSet => "EMPTY_FEASIBLE_SET",
            Error::TooLarge(_) => "TOO_LARGE",
            Error::GridVerification(_) => "PENALTY_SPEC",
            Error::Io(_) | Error::Solver(_) | Error::CertificateRejected(_) | Error::NotNonnegative(_) => {
                return CliError::Internal(e.to_string());
            }
        };
        CliError::input(code, e.to_string())
    }
}

pub fn io(what: impl std::fmt::Display, e: std::io::Error) -> CliError {
    CliError::Internal(format!("{what}: {e}"))
}

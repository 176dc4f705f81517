use serde_json::json;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for configuration problems (including unwritable outputs).
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical failures.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error(transparent)]
    Numeric(#[from] carleman_core::Error),
    #[error("oracle checks failed: {0}")]
    OracleFailed(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Output(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Output(e.to_string())
    }
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Output(_) => EXIT_CONFIG,
            LabError::Numeric(_) | LabError::OracleFailed(_) => EXIT_NUMERIC,
        }
    }

    /// Machine-readable form printed on failure.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            LabError::Config(m) | LabError::Output(m) => json!({"error": "ConfigInvalid", "message": m}),
            LabError::Numeric(e) => json!({"error": e.kind(), "message": e.to_string()}),
            LabError::OracleFailed(m) => json!({"error": "OracleFailed", "message": m}),
        }
    }
}

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use crate::io::IngestError;

/// Everything the CLI and the service can fail with.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Ingest(#[from] IngestError),

    #[error(transparent)]
    Core(#[from] survconf_core::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid request: {0}")]
    BadRequest(String),

    #[error("{0} not found")]
    NotFound(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{context}: {source}")]
    Json { context: String, source: serde_json::Error },

    #[error("internal error: {0}")]
    Internal(String),
}

/// Machine-readable error, as printed on stderr and returned by the service.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        AppError::Json {
            context: context.into(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            AppError::Ingest(_) => "ingest_error",
            AppError::Core(e) => e.code(),
            AppError::Config(_) => "invalid_config",
            AppError::BadRequest(_) => "bad_request",
            AppError::NotFound(_) => "not_found",
            AppError::Io { .. } => "io_error",
            AppError::Json { .. } => "invalid_json",
            AppError::Internal(_) => "internal",
        }
    }

    /// HTTP status for the service.
    pub fn status(&self) -> u16 {
        use survconf_core::Error as E;
        match self {
            AppError::Ingest(_) | AppError::Config(_) | AppError::BadRequest(_) | AppError::Json { .. } => 400,
            AppError::NotFound(_) => 404,
            AppError::Io { .. } | AppError::Internal(_) => 500,
            AppError::Core(e) => match e {
                E::InvalidInput(_) | E::InvalidSplit(_) => 400,
                E::InsufficientSupport { .. } => 409,
                E::FitDiverged(_) | E::SingularDesign | E::WeightDegenerate { .. } | E::CalibrationFailed { .. } => 422,
            },
        }
    }

    pub fn body(&self) -> ErrorBody {
        use survconf_core::Error as E;
        let detail = match self {
            AppError::Ingest(e) => json!({ "row": e.row, "column": e.column }),
            AppError::Core(E::InsufficientSupport { c_l, found, required }) => {
                json!({ "c_L": c_l, "found": found, "required": required })
            }
            AppError::Core(E::WeightDegenerate { time }) => json!({ "time": time }),
            AppError::Core(E::CalibrationFailed { target, .. }) => json!({ "target": target }),
            AppError::Io { path, .. } => json!({ "path": path.display().to_string() }),
            _ => Value::Null,
        };
        ErrorBody {
            code: self.code().into(),
            message: self.to_string(),
            detail,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;

#[cfg(test)]
mod tests {
    use super::*;
    use survconf_core::Error as E;

    #[test]
    fn statuses() {
        let cases: [(AppError, u16, &str); 6] = [
            (AppError::NotFound("m".into()), 404, "not_found"),
            (
                E::InsufficientSupport {
                    c_l: 3.0,
                    found: 2,
                    required: 50,
                }
                .into(),
                409,
                "insufficient_support",
            ),
            (E::FitDiverged("x".into()).into(), 422, "fit_diverged"),
            (E::InvalidInput("x".into()).into(), 400, "invalid_input"),
            (AppError::Config("x".into()), 400, "invalid_config"),
            (AppError::Internal("x".into()), 500, "internal"),
        ];
        for (e, status, code) in cases {
            assert_eq!((e.status(), e.code()), (status, code));
        }
    }

    #[test]
    fn support_detail() {
        let b = AppError::from(E::InsufficientSupport {
            c_l: 3.0,
            found: 2,
            required: 50,
        })
        .body();
        assert_eq!(b.detail, json!({"c_L": 3.0, "found": 2, "required": 50}));
    }
}

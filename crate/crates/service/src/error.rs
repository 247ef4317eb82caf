use std::path::PathBuf;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown campaign `{0}`")]
    UnknownCampaign(String),

    #[error("annotator `{0}` is not registered for this campaign")]
    UnknownAnnotator(String),

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("bad request: {0}")]
    BadRequest(String),

    #[error("invalid campaign: {0}")]
    InvalidCampaign(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("journal {path}:{line}: {message}")]
    Journal { path: PathBuf, line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] anaphora_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ServiceError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io { path: path.into(), source }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownCampaign(_) | ServiceError::UnknownAnnotator(_) | ServiceError::UnknownItem(_) => {
                StatusCode::NOT_FOUND
            }
            ServiceError::BadRequest(_)
            | ServiceError::InvalidCampaign(_)
            | ServiceError::Config { .. }
            | ServiceError::Core(anaphora_core::Error::InsufficientRaters(_)) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

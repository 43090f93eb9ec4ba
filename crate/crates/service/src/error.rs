use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use tearsim_core::api::ApiError;

use crate::actor::SessionClosed;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error(transparent)]
    Closed(#[from] SessionClosed),
    #[error("{0}")]
    BadRequest(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::Closed(_) => StatusCode::GONE,
            ServiceError::BadRequest(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ApiError { error: self.to_string() })).into_response()
    }
}

//! Persistence and HTTP access for QLens analytics.

mod http;
mod query;
mod service;
pub mod store;

use thiserror::Error;

pub use http::{router, serve};
pub use query::parse_group_query;
pub use service::{IngestReport, QuestionEntry, QuestionList, Service, INGEST_SCHEMA, QUESTIONS_SCHEMA};
pub use store::{group_hash, Store, StoreError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown question `{0}`")]
    UnknownQuestion(String),
    #[error("no common error at rank {0}")]
    UnknownError(usize),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl ServiceError {
    /// Stable machine-readable kind.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownQuestion(_) => "unknown_question",
            ServiceError::UnknownError(_) => "unknown_error",
            ServiceError::InvalidQuery(_) => "invalid_query",
            ServiceError::MalformedPayload(_) => "malformed_payload",
            ServiceError::Store(_) => "store_unavailable",
        }
    }
}

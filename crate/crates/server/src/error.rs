use std::io;

use concert_core::emailer::EmailError;
use concert_core::filters::FilterError;
use concert_core::metrics::MetricsError;
use concert_core::model::ModelError;
use concert_core::persist::PersistError;
use concert_core::synthgen::SynthError;
use serde::Serialize;
use thiserror::Error;

/// Error payload shared by the HTTP API and the CLI. `status` is the HTTP
/// status the API answers with; the CLI only prints `kind: message`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Error)]
#[error("{kind}: {message}")]
pub struct ServiceError {
    #[serde(skip)]
    pub status: u16,
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<u64>,
}

impl ServiceError {
    pub fn new(status: u16, kind: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind: kind.to_string(),
            message: message.into(),
            location: None,
        }
    }

    pub fn bad_request(kind: &str, message: impl Into<String>) -> Self {
        Self::new(400, kind, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(404, "NotFound", message)
    }

    fn at(mut self, location: Option<u64>) -> Self {
        self.location = location;
        self
    }
}

impl From<FilterError> for ServiceError {
    fn from(e: FilterError) -> Self {
        let status = match e {
            FilterError::NotFound(_) => 404,
            FilterError::NameExists(_) | FilterError::NameInUse { .. } => 409,
            _ => 400,
        };
        ServiceError::new(status, e.kind(), e.to_string()).at(e.offset().map(|o| o as u64))
    }
}

impl From<EmailError> for ServiceError {
    fn from(e: EmailError) -> Self {
        let status = match e {
            EmailError::Forbidden(_) => 403,
            EmailError::NotFound(_) | EmailError::UnknownMember { .. } => 404,
            EmailError::NameExists(_) => 409,
            _ => 400,
        };
        let location = match &e {
            EmailError::UnknownPlaceholder { position, .. } => Some(*position as u64),
            _ => None,
        };
        ServiceError::new(status, e.kind(), e.to_string()).at(location)
    }
}

impl From<PersistError> for ServiceError {
    fn from(e: PersistError) -> Self {
        let kind = e.kind();
        let (status, location) = match &e {
            PersistError::Ingest(inner) => (400, inner.location()),
            PersistError::Model(_) | PersistError::InvalidCourseId(_) => (400, None),
            PersistError::CourseExists(_) => (409, None),
            _ if kind == "NotFound" => (404, None),
            _ => (500, None),
        };
        ServiceError::new(status, kind, e.to_string()).at(location)
    }
}

impl From<MetricsError> for ServiceError {
    fn from(e: MetricsError) -> Self {
        let kind = match e {
            MetricsError::NoTeams => "NoTeams",
            MetricsError::BadBinCount(_) => "BadBinCount",
            MetricsError::EmptySelection => "EmptySelection",
            MetricsError::UnknownMetric(_) => "UnknownMetric",
        };
        ServiceError::bad_request(kind, e.to_string())
    }
}

impl From<ModelError> for ServiceError {
    fn from(e: ModelError) -> Self {
        let kind = match e {
            ModelError::InvalidWindow { .. } => "InvalidWindow",
            ModelError::UnknownMetric(_) => "UnknownMetric",
            _ => "ValidationError",
        };
        ServiceError::bad_request(kind, e.to_string())
    }
}

impl From<SynthError> for ServiceError {
    fn from(e: SynthError) -> Self {
        let kind = match e {
            SynthError::BadMix(_) => "BadMix",
            SynthError::BadParams(_) => "BadParams",
        };
        ServiceError::bad_request(kind, e.to_string())
    }
}

impl From<(io::Error, &std::path::Path)> for ServiceError {
    fn from((e, path): (io::Error, &std::path::Path)) -> Self {
        PersistError::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    }
}

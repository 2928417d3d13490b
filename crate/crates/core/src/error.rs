use thiserror::Error;

use crate::model::{Finding, ItemKind};

/// Errors raised by the planning and simulation pipeline.
///
/// Every variant maps to a stable upper-snake-case code (see [`Error::code`])
/// which is what the CLI and the HTTP service report to callers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({lat}, {lon}) is more than 1 degree away from the projection origin")]
    ProjectionRange { lat: f64, lon: f64 },

    #[error("distance must be positive, got {0} m")]
    NonpositiveDistance(f64),

    #[error("invalid link geometry: {0}")]
    InvalidGeometry(String),

    #[error("unsupported PHY parameters: {0}")]
    UnsupportedParams(String),

    #[error("band mismatch: transmitter on {tx}, receiver on {rx}")]
    BandMismatch { tx: String, rx: String },

    #[error("degenerate hull: {0}")]
    DegenerateHull(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("no price for item kind {0}")]
    MissingPrice(ItemKind),

    #[error("empty coverage grid: {0}")]
    EmptyGrid(String),

    #[error("unknown node id {0}")]
    UnknownNode(String),

    #[error("scenario rejected with {} error finding(s)", .0.iter().filter(|f| f.is_error()).count())]
    RejectedScenario(Vec<Finding>),

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::ProjectionRange { .. } => "PROJECTION_RANGE",
            Error::NonpositiveDistance(_) => "NONPOSITIVE_DISTANCE",
            Error::InvalidGeometry(_) => "INVALID_GEOMETRY",
            Error::UnsupportedParams(_) => "UNSUPPORTED_PARAMS",
            Error::BandMismatch { .. } => "BAND_MISMATCH",
            Error::DegenerateHull(_) => "DEGENERATE_HULL",
            Error::InvalidPolygon(_) => "INVALID_POLYGON",
            Error::MissingPrice(_) => "MISSING_PRICE",
            Error::EmptyGrid(_) => "EMPTY_GRID",
            Error::UnknownNode(_) => "UNKNOWN_NODE",
            Error::RejectedScenario(_) => "REJECTED_SCENARIO",
            Error::Json(_) => "MALFORMED_DOCUMENT",
            Error::Io(_) => "IO_ERROR",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

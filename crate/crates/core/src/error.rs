use thiserror::Error;

/// Errors surfaced by instance handling, solving and ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),

    #[error("no travel edge between vertices {0} and {1}")]
    MissingEdge(usize, usize),

    #[error("time {t} outside the planning horizon [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("document error: {0}")]
    Document(String),

    #[error("destination vertex {0} is unreachable within the time budget")]
    NoRoute(usize),

    #[error("brute force capped at {cap} collectible vertices, instance has {n}")]
    OracleCap { n: usize, cap: usize },

    #[error("no finite slope bound exists for {0} profit functions")]
    NoLipschitz(&'static str),

    #[error("model needs {vars} variables, cap is {cap}")]
    ModelTooLarge { vars: usize, cap: usize },

    #[error("event data: {0}")]
    Ingest(String),

    #[error("cycle detected in the time-expanded graph (construction bug)")]
    CycleDetected,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

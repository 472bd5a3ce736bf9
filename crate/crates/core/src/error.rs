use thiserror::Error;

/// Errors raised by the query engine, the baselines and dataset ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("facility coincides with the query facility")]
    CoincidentFacilities,

    #[error("query point ({x}, {y}) lies outside the domain rectangle")]
    QueryOutsideDomain { x: f64, y: f64 },

    #[error("k must be at least 1")]
    InvalidK,

    #[error("worker count must be at least 1")]
    InvalidWorkers,

    #[error("rectangle must have strictly positive width and height")]
    InvalidRect,

    #[error("zone was frozen by conservative pruning and no longer describes the influence zone")]
    StaleZone,

    #[error("facility set is empty")]
    EmptyFacilitySet,

    #[error("query index {index} out of range for {len} facilities")]
    InvalidQueryIndex { index: usize, len: usize },

    #[error("monochromatic query needs at least two points")]
    TooFewPoints,

    #[error("malformed line {line}: {content:?}")]
    MalformedLine { line: usize, content: String },

    #[error("header declares {declared} vertices but {found} were read")]
    CountMismatch { declared: usize, found: usize },

    #[error("requested {requested} facilities from a dataset of {available} points")]
    SpecTooLarge { requested: usize, available: usize },

    #[error("not a point cache file")]
    BadCacheMagic,

    #[error("non-finite coordinate")]
    NonFinite,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node {node} out of range for a graph with {n} nodes")]
    EndpointOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("non-finite weight at position {0}")]
    NonFiniteWeight(usize),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("graph with {half_edges} half-edges exceeds the dense limit of {limit}")]
    GraphTooLarge { half_edges: usize, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("labels are not binary (q = {0})")]
    NotBinary(usize),
    #[error("class {class} out of range for q = {q}")]
    ClassOutOfRange { class: usize, q: usize },
    #[error("degenerate deflation denominator at stage {stage} (|v.Bv| = {denom:e})")]
    DegenerateDeflation { stage: usize, denom: f64 },
    #[error("k-means left {empty} of {q} clusters empty")]
    EmptyClusters { empty: usize, q: usize },
    #[error("weighting has zero second moment")]
    DegenerateWeighting,
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("distribution {0} has no density")]
    NoDensity(String),
    #[error("no revealed labels")]
    NoRevealedLabels,
    #[error("format error: {0}")]
    Format(String),
    #[error("dataset not found: {}", .0.display())]
    DatasetMissing(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

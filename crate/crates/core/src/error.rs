use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("parameter shapes do not match")]
    ShapeMismatch,

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no prototypes: feature table has no class with a positive count")]
    NoPrototypes,

    #[error("probability vector is not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("lira requires a shadow context")]
    MissingShadowContext,

    #[error("scores must contain at least one member and one nonmember")]
    SingleClass,

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("model view {view} out of range ({available} available)")]
    InvalidView { view: usize, available: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

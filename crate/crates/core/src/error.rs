use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("distributions live on distinct ontic spaces")]
    DistinctSpaces,

    #[error("invalid ontic space: {0}")]
    InvalidSpace(String),

    #[error("normalization: total mass {total} differs from 1 (tolerance {tolerance:e}){}", context_suffix(.context))]
    Normalization {
        total: f64,
        tolerance: f64,
        context: Option<String>,
    },

    #[error("negative or non-finite density {value} at atom `{atom}`")]
    NegativeDensity { atom: String, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ket is not normalized: squared norm {0}")]
    UnnormalizedKet(f64),

    #[error("kets {0} and {1} are not orthogonal")]
    NotOrthogonal(usize, usize),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("invalid experiment `{name}`: {reason}")]
    InvalidExperiment { name: String, reason: String },

    #[error("invalid preparation grid: {0}")]
    InvalidGrid(String),

    #[error("invalid priors: {0}")]
    InvalidPriors(String),

    #[error("atom `{0}` has zero mixture mass")]
    ZeroMixtureMass(String),

    #[error("atoms are not product-labeled: {0}")]
    NotProductLabeled(String),

    #[error("model has no quantum target")]
    MissingQuantumTarget,

    #[error("atom {0} lies outside the model support")]
    OutsideSupport(usize),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

fn context_suffix(context: &Option<String>) -> String {
    match context {
        Some(c) => format!(" in {c}"),
        None => String::new(),
    }
}

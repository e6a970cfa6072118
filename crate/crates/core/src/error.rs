use thiserror::Error;

pub type Result<T> = std::result::Result<T, BresseError>;

#[derive(Debug, Error)]
pub enum BresseError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    InvalidScenario(Vec<String>),

    #[error("scenario file: {0}")]
    ScenarioFile(String),

    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("{what} is singular")]
    SingularMatrix { what: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("position x = {x} lies outside [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },

    #[error("iλ with λ = {lambda} is within {distance:e} of the spectrum (resonance)")]
    Resonance { lambda: f64, distance: f64 },

    #[error(
        "λ_max = {requested} exceeds the resolved-frequency cap {cap} for this mesh; \
         use at least {suggested_elements} elements"
    )]
    AboveResolvedCap {
        requested: f64,
        cap: f64,
        suggested_elements: usize,
    },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("witness system for n = {n} is singular (|det| = {det:e})")]
    SingularWitness { n: u32, det: f64 },

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

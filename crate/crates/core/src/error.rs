use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("superluminal velocity |v| = {0} (must be < 1)")]
    Superluminal(f64),

    #[error("invalid axis {0} (expected 1, 2 or 3)")]
    InvalidAxis(usize),

    #[error("grid axis {axis}: {reason}")]
    InvalidGrid { axis: usize, reason: String },

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("region {0}")]
    InvalidRegion(String),

    #[error("wrong representation: expected {expected}")]
    WrongRepresentation { expected: &'static str },

    #[error("not a proper orthochronous Lorentz transform: {0}")]
    NotLorentz(String),

    #[error("transformed support leaves the grid: {0}")]
    Clearance(String),

    #[error("projection annihilated the state")]
    Annihilated,

    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("fermionic mode {mode} occupied {occupation} times")]
    PauliViolation { mode: usize, occupation: u32 },

    #[error("state has weight {0:e} outside the requested energy branch")]
    BranchViolation(f64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

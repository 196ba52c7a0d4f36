use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("element {element}: patch reached {available} elements, {needed} required")]
    PatchTooSmall {
        element: usize,
        needed: usize,
        available: usize,
    },

    #[error("element {element}: sample set is not unisolvent (rank {rank} < {dim})")]
    Unisolvence {
        element: usize,
        rank: usize,
        dim: usize,
    },

    #[error("system matrix is not positive definite ({context})")]
    NotPositiveDefinite { context: String },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolverResidual { residual: f64, tolerance: f64 },

    #[error("coefficient violates ellipticity at ({x}, {y}): {detail}")]
    Ellipticity { x: f64, y: f64, detail: String },

    #[error("{failed} of {total} cell problems failed; first: {first}")]
    CellFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
}

impl Error {
    /// Short stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::OutsideDomain { .. } => "outside_domain",
            Error::PatchTooSmall { .. } => "patch_too_small",
            Error::Unisolvence { .. } => "unisolvence",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::SolverResidual { .. } => "solver_residual",
            Error::Ellipticity { .. } => "ellipticity",
            Error::CellFailures { .. } => "cell_failures",
            Error::Incompatible(_) => "incompatible",
            Error::LinearProgram(_) => "linear_program",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Config(_) => "config",
        }
    }
}

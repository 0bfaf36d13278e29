use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain specification: {0}")]
    InvalidSpec(String),

    #[error("no interior node at resolution {resolution}")]
    EmptyInterior { resolution: usize },

    #[error("ellipticity envelope violated in cell {cell}: {detail}")]
    EllipticityViolation { cell: usize, detail: String },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate condenser: {0}")]
    DegenerateCondenser(String),

    #[error("epsilon {epsilon} is resolved by only {cells_per_period:.2} cells per period")]
    UnderResolved { epsilon: f64, cells_per_period: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::EmptyInterior { .. } => "EmptyInterior",
            Error::EllipticityViolation { .. } => "EllipticityViolation",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::DegenerateCondenser(_) => "DegenerateCondenser",
            Error::UnderResolved { .. } => "UnderResolved",
            Error::InvalidParams(_) => "InvalidParams",
            Error::DimensionMismatch(_) => "DimensionMismatch",
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::UnderResolved { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

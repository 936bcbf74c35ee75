use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),

    #[error("expected a {expected}-mode state, got {got} modes")]
    ModeMismatch { expected: usize, got: usize },

    #[error("invalid mode index {0}")]
    InvalidModeIndex(usize),

    #[error("invalid {name}: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("truncation overflow: {population:.3e} of the population sits at or beyond the cutoff {cutoff}")]
    Truncation { cutoff: usize, population: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("quadrature grid too small: tail mass {0:.3e}")]
    GridTooSmall(f64),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    /// True for failures caused by the numerics (truncation, convergence, PSD drift)
    /// rather than by invalid inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. }
                | Error::NotPositive(_)
                | Error::NotHermitian(_)
                | Error::GridTooSmall(_)
                | Error::GridTooCoarse(_)
                | Error::Degenerate(_)
        )
    }
}

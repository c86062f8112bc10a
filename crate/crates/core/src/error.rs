use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Error {
    #[error("cutoff {cutoff} too small: truncated norm deficit {deficit:.3e} exceeds {tolerance:.1e}")]
    CutoffTooSmall {
        cutoff: usize,
        deficit: f64,
        tolerance: f64,
    },

    #[error("outcome table captures only {captured_mass:.6} of the probability mass")]
    CutoffInsufficient { captured_mass: f64 },

    #[error("matrix is singular: diagonal entry {index} vanishes")]
    Singular { index: usize },

    #[error("allocation infeasible: sensor {index} would need intensity {value:.6e}")]
    Infeasible { index: usize, value: f64 },

    #[error("vector is not normalized: 1-norm {norm}")]
    Unnormalized { norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dense basis of {size} states exceeds the limit of {limit}")]
    BasisTooLarge { size: usize, limit: usize },

    #[error("outcome table is empty")]
    EmptyTable,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("wrong scheme: expected {expected}")]
    WrongScheme { expected: &'static str },
}

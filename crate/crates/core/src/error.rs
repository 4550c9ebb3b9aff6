use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("assemblage is signalling (max marginal deviation {max_deviation:.3e})")]
    Signalling { max_deviation: f64 },

    #[error("instruments do not share the dilation's channel (max Choi deviation {max_deviation:.3e})")]
    ChannelMismatch { max_deviation: f64 },

    #[error("Kraus operators are linearly dependent: Gram rank {rank} < {kraus_count}")]
    NotMinimal { rank: usize, kraus_count: usize },

    #[error("extracted dummy effect is not positive (minimum eigenvalue {min_eigenvalue:.3e})")]
    InvalidDummyPovm { min_eigenvalue: f64 },

    #[error("{count} deterministic strategies exceed the cap of {cap}")]
    StrategyCapExceeded { count: u128, cap: usize },

    #[error(
        "SDP solver did not converge after {iterations} iterations \
         (primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e}, gap {gap:.3e})"
    )]
    SolverNotConverged {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
        gap: f64,
    },

    #[error("Bloch vector has norm {norm} > 1")]
    InvalidBlochVector { norm: f64 },

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

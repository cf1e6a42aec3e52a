use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible energy budget: {0}")]
    InfeasibleBudget(String),

    #[error("quadrature did not converge: relative change {achieved:.3e} after {nodes} nodes per axis (target {target:.1e})")]
    QuadratureNonConvergence { achieved: f64, target: f64, nodes: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

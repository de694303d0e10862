use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure carries a one-line reason; the CLI prints `Display` verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain: {0}")]
    Domain(String),

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("coefficients: {0}")]
    Coefficients(String),

    #[error("expression: {0}")]
    Expr(String),

    #[error("solver: singular system ({0})")]
    Singular(String),

    #[error("solver: residual {residual:.3e} above acceptance {limit:.1e}")]
    NotConverged { residual: f64, limit: f64 },

    #[error("neumann: {0}")]
    Neumann(String),

    #[error("green: {0}")]
    Green(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("config: {0}")]
    Config(String),

    /// A run precondition that is not tied to one input, such as `ρ ≥ 4h`.
    #[error("{0}")]
    Precondition(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

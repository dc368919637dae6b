use crate::manifold::PointPO;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular metric: {0}")]
    Singular(String),
    #[error("stencil construction failed: {0}")]
    Stencil(String),
    #[error("algorithm failure: {0}")]
    Algorithm(String),
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("instability: {0}")]
    Instability(String),
    #[error("backtracking failed: {msg}")]
    Backtrack { msg: String, partial: Vec<PointPO> },
    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: u64, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::Instability(_)
                | Error::Backtrack { .. }
                | Error::Algorithm(_)
                | Error::Singular(_)
        )
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

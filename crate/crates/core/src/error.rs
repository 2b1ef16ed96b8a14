use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported {kind} quadrature degree {degree} (max {max})")]
    UnsupportedQuadrature {
        kind: &'static str,
        degree: usize,
        max: usize,
    },

    #[error("local mass matrix of element {element} is singular")]
    SingularLocalMass { element: usize },

    #[error("singular saddle-point system ({context})")]
    Singular { context: String },

    #[error("non-finite state at step {step} (t = {time})")]
    NonFiniteState { step: usize, time: f64 },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

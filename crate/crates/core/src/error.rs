use thiserror::Error;

/// Errors raised by the solvers and state containers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("nonlinear solve did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("linear solve failed after {iterations} iterations (relative residual {residual:e}, condition estimate {condition:e})")]
    SolverFailure {
        iterations: usize,
        residual: f64,
        condition: f64,
    },

    #[error("magnetization {target} is not reachable at beta = {beta} (achievable range {low}..{high})")]
    UnreachableMagnetization {
        target: f64,
        beta: f64,
        low: f64,
        high: f64,
    },

    #[error("reference state has zero norm")]
    DegenerateReference,

    #[error("effective force is singular at string {string}, rapidity {lambda}")]
    SingularForce { string: usize, lambda: f64 },

    #[error("covariance matrix is singular (determinant {determinant:e})")]
    FlowSingularity { determinant: f64 },

    #[error("filling value {value} at string {string}, cell {cell} lies outside [0, 1]")]
    FillingOutOfRange { string: usize, cell: usize, value: f64 },

    #[error("stroke failed at step {step} (chi = {chi}): {source}")]
    StrokeFailure {
        step: usize,
        chi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{stroke} failed: {source}")]
    CycleFailure {
        stroke: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_invalid_input(&self) -> bool {
        match self {
            Error::InvalidArgument(_) => true,
            Error::StrokeFailure { source, .. } | Error::CycleFailure { source, .. } => source.is_invalid_input(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

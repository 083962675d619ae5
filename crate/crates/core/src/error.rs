use std::path::PathBuf;

/// Errors produced by the numerical routines and the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside the domain of `{op}`: {value}")]
    Domain { op: &'static str, value: f64 },

    #[error("moment of order {order} diverges (shape {shape})")]
    MomentDivergence { order: u32, shape: f64 },

    #[error("quadrature did not converge up to order {max_order}: last iterates {last:e} and {previous:e}")]
    Convergence {
        max_order: usize,
        last: f64,
        previous: f64,
    },

    #[error("inconsistent moments: m0*m2 - m1^2 = {defect:e}")]
    NumericalInconsistency { defect: f64 },

    #[error("non-finite coefficient while assembling cell ({i}, {j})")]
    Assembly { i: usize, j: usize },

    #[error("linear solve failed: residual {residual:e} exceeds {tolerance:e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    #[error("solution entry ({i}, {j}) = {value:e} is negative")]
    NonnegativityViolation { i: usize, j: usize, value: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("non-finite state on path {path} at t = {time}")]
    BlowUp { path: usize, time: f64 },

    #[error("no samples to histogram")]
    EmptySample,

    #[error("zero total mass")]
    ZeroMass,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::NumericalInconsistency { .. }
                | Error::Assembly { .. }
                | Error::SolverFailure { .. }
                | Error::NonnegativityViolation { .. }
                | Error::BlowUp { .. }
                | Error::MomentDivergence { .. }
                | Error::ZeroMass
                | Error::EmptySample
        )
    }
}

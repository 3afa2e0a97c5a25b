use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operator contains non-finite entries")]
    NonFinite,

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("operator is not Hermitian (max deviation {defect:e}, tolerance {tol:e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("trajectories are sampled on different grids")]
    GridMismatch,

    #[error("evaluation failed at t = {time}: {source}")]
    Evaluation { time: f64, source: Box<Error> },

    #[error("unitarity defect {defect:e} at t = {time} exceeds the stability limit")]
    Unstable { time: f64, defect: f64 },

    #[error(
        "commutator [H1({t1}), H1({t2})] is not a multiple of identity (deviation {deviation:e})"
    )]
    NotCNumber { t1: f64, t2: f64, deviation: f64 },

    #[error("singular detuning operator: diagonal entry {index} equals {value:e}")]
    SingularDetuning { index: usize, value: f64 },

    #[error("degenerate tuning: {0}")]
    Degenerate(String),

    #[error(
        "Fock truncation too small: {what} (defect {defect:e}); try fock_dim >= {suggested_fock_dim}"
    )]
    Truncation { what: String, defect: f64, suggested_fock_dim: usize },
}

impl Error {
    pub(crate) fn at_time(self, time: f64) -> Self {
        Error::Evaluation { time, source: Box::new(self) }
    }

    /// True for failures of a numerical guard rather than of the caller's input.
    pub fn is_numerical_guard(&self) -> bool {
        match self {
            Error::Unstable { .. } | Error::Truncation { .. } | Error::NotCNumber { .. } => true,
            Error::Evaluation { source, .. } => source.is_numerical_guard(),
            _ => false,
        }
    }
}

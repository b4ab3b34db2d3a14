use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("time step {dt} violates the CFL bound; use dt <= {suggested}")]
    Cfl { dt: f64, suggested: f64 },

    #[error("solution blew up; last valid time {last_valid_time}")]
    BlowUp { last_valid_time: f64 },

    #[error("threshold not reached by t = {horizon} (final ratio {final_ratio})")]
    NotReached { horizon: f64, final_ratio: f64 },

    #[error("vanishing order undetermined up to order {max_order}")]
    OrderUndetermined { max_order: usize },

    #[error("value underflows to zero (natural log {ln_value})")]
    Underflow { ln_value: f64 },

    #[error("{failed} of {total} sweep jobs failed: {first_error}")]
    PartialSweep {
        failed: usize,
        total: usize,
        first_error: String,
        /// (parameter, value) pairs of the jobs that did complete.
        completed: Vec<(f64, f64)>,
    },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

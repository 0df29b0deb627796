use thiserror::Error;

/// Errors raised by the solvers and their supporting machinery.
#[derive(Debug, Error)]
pub enum NlcError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {what} at cell {cell}")]
    NonFinite { what: &'static str, cell: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} must be positive, got {value} at cell {cell}")]
    Domain {
        what: &'static str,
        cell: usize,
        value: f64,
    },

    #[error("density leaves the regime |rho - 1| < 1/2 (rho = {value} at cell {cell})")]
    Regime { cell: usize, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("perturbation too large: |n0 + n_bar| = {magnitude} < 0.5 at cell {cell}")]
    PerturbationTooLarge { cell: usize, magnitude: f64 },

    #[error("degenerate director: |n| = {magnitude} at cell {cell}")]
    Degenerate { cell: usize, magnitude: f64 },

    #[error("time step {dt} exceeds the stability limit {limit} for {scheme}")]
    StepTooLarge {
        dt: f64,
        limit: f64,
        scheme: &'static str,
    },

    #[error("solution blew up at t = {time} (step {step})")]
    BlowUp { time: f64, step: usize },

    #[error("step {step} failed: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<NlcError>,
    },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NlcError>;

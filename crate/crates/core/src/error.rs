use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("operation `{op}` is not defined for a {rank} field")]
    InvalidRank {
        op: &'static str,
        rank: &'static str,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown selector `{0}`")]
    UnknownSelector(String),

    #[error("derivative order {0} exceeds the supported maximum of 4")]
    OrderTooHigh(usize),

    #[error("trajectory needs at least 2 time steps, got {0}")]
    TooFewSteps(usize),

    #[error("time grids do not match: {0}")]
    TimeGridMismatch(String),

    #[error("iterative solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("linear step failed at time index {index}: {source}")]
    StepFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("window too large (T = {window_t}): {reason}; reduce the window length")]
    WindowTooLarge { window_t: f64, reason: String },

    #[error("window length underflow at t = {time}: window of {steps} step(s) cannot be shortened further")]
    WindowUnderflow { time: f64, steps: usize },

    #[error("window {window} failed: {source}")]
    WindowFailed {
        window: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error{}, key `{key}`: {message}", line_suffix(*line))]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("output directory {} is not writable: {source}", path.display())]
    OutputDir {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in `error.json`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch => "grid_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::InvalidRank { .. } => "invalid_rank",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::UnknownSelector(_) => "unknown_selector",
            Error::OrderTooHigh(_) => "order_too_high",
            Error::TooFewSteps(_) => "too_few_steps",
            Error::TimeGridMismatch(_) => "time_grid_mismatch",
            Error::NotConverged { .. } => "not_converged",
            Error::StepFailed { .. } => "step_failed",
            Error::WindowTooLarge { .. } => "window_too_large",
            Error::WindowUnderflow { .. } => "window_underflow",
            Error::WindowFailed { .. } => "window_failed",
            Error::Config { .. } => "config",
            Error::OutputDir { .. } => "output_dir",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

/// `" at line N"` for file lines; line 0 marks command-line overrides and defaults.
fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}

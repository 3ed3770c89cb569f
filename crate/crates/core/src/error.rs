use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
///
/// `exit_code` groups errors the way the command line reports them:
/// 1 for usage/config/input problems, 2 for numerical failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),

    #[error("grid too small: {fraction:.2e} of the envelope mass of `{which}` lies outside the grid (limit {limit:.0e})")]
    GridTooSmall {
        which: &'static str,
        fraction: f64,
        limit: f64,
    },

    #[error("records are not sorted by timestamp (index {0})")]
    UnsortedRecords(usize),

    #[error("histogram bin grids do not match: {0}")]
    GridMismatch(String),

    #[error("window must be positive, got {0}")]
    InvalidWindow(f64),

    #[error("conditioning event has zero probability (detector {detector}, bin {bin})")]
    ZeroProbabilityEvent { detector: char, bin: usize },

    #[error("insufficient counts: {got} in the fit region, need at least {need}")]
    InsufficientCounts { got: f64, need: f64 },

    #[error("degenerate fit input: {0}")]
    DegenerateInput(String),

    #[error("simulation target unreachable: {0}")]
    TargetUnreachable(String),

    #[error("numerical check failed: {0}")]
    NumericalFailure(String),

    #[error("parse error in {path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 = usage/config/input, 2 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalFailure(_)
            | Error::TargetUnreachable(_)
            | Error::InsufficientCounts { .. }
            | Error::DegenerateInput(_)
            | Error::ZeroProbabilityEvent { .. } => 2,
            _ => 1,
        }
    }
}

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("invalid rational `{0}`")]
    Rational(String),
    #[error("invalid ordinal `{0}`")]
    Ordinal(String),
    #[error("invalid set `{0}`")]
    FinSet(String),
    #[error("invalid vector `{0}`")]
    Vector(String),
    #[error("invalid window `{0}`")]
    Window(String),
    #[error("invalid point `{0}`")]
    Point(String),
}

/// Errors shared by every module of the workbench.
///
/// `Budget` is a resource error: the computation was well-posed but would
/// exceed a configured limit. `Precondition` rejects ill-posed input.
/// `Exhausted` means a bounded search finished without a witness.
/// `Failed` is a mathematical failure inside a run, naming the step.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("budget exceeded for {what}: needs {needed}, limit {limit}")]
    Budget { what: &'static str, needed: u64, limit: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("search exhausted: {0}")]
    Exhausted(String),
    /// A checked step of a multi-step run did not hold.
    #[error("step {step} failed: {detail}")]
    Failed { step: String, detail: String },
}

impl Error {
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Budget { .. } | Error::Exhausted(_))
    }
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! precondition {
    ($($arg:tt)*) => {
        $crate::error::Error::Precondition(alloc::format!($($arg)*))
    };
}
pub(crate) use precondition;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time interval: dt = {0} (must be > 0)")]
    InvalidInterval(f64),

    #[error("measurement rejected: {0}")]
    RejectedMeasurement(String),

    #[error("timestamp mismatch: state at {state}, measurement at {measurement}")]
    TimestampMismatch { state: f64, measurement: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("cannot combine a {left} with a {right}")]
    KindMismatch {
        left: &'static str,
        right: &'static str,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("samples at {wrench} and {kinematics} are further apart than the pairing tolerance {tolerance}")]
    Pairing {
        wrench: f64,
        kinematics: f64,
        tolerance: f64,
    },

    #[error("ill-conditioned measurement: {0}")]
    IllConditioned(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("record at t={t}: {source}")]
    AtRecord {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn at_record(self, t: f64) -> Self {
        match self {
            e @ Error::AtRecord { .. } => e,
            e => Error::AtRecord { t, source: Box::new(e) },
        }
    }

    /// Process exit code for this error: 1 for usage/config problems, 2 for
    /// problems with the data being processed.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 1,
            Error::Io { .. } => 1,
            Error::AtRecord { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

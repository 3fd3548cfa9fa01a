use std::path::PathBuf;

use crate::features::Vowel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Wav { path: PathBuf, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no speech detected")]
    NoSpeech,

    #[error("signal too short: {duration_s:.4} s < window {window_s:.4} s")]
    SignalTooShort { duration_s: f64, window_s: f64 },

    #[error("degenerate frame")]
    DegenerateFrame,

    #[error("unstable recursion at order {order}: reflection coefficient {value}")]
    UnstableRecursion { order: usize, value: f64 },

    #[error("root finding did not converge (degree {degree}, worst relative residual {residual:e})")]
    RootsNotConverged { degree: usize, residual: f64 },

    #[error("{path}:{line}: {msg}")]
    Posteriorgram {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("{path}:{line}: {msg}")]
    Table {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("no valid frames for /{0}/")]
    EmptyVowel(Vowel),

    #[error("constant input")]
    ConstantInput,

    #[error("{0}")]
    Numeric(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with all context layers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

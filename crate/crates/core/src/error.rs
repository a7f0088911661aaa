use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sender {sender}: route references link {link}, but the network has {n_links} links")]
    InvalidRoute {
        sender: usize,
        link: usize,
        n_links: usize,
    },

    #[error("episode is done; reset the environment before stepping")]
    EpisodeDone,

    #[error("unknown scenario `{name}` (known: {known})")]
    UnknownScenario { name: String, known: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Load(#[from] LoadError),

    #[error("{path}:{line}: {msg}")]
    Config { path: PathBuf, line: usize, msg: String },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Failures while reading a policy parameter file.
#[derive(Debug, Error, PartialEq)]
pub enum LoadError {
    #[error("unsupported parameter file version {found} (reader supports {expected})")]
    Version { found: String, expected: u32 },

    #[error("parameter file ends before section `{0}`")]
    MissingSection(String),

    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

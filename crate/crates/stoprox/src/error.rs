use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] stoprox_core::Error),
    #[error(transparent)]
    Solve(Box<stoprox_core::solvers::SolveFailure>),
    #[error("unknown bench suite `{0}` (expected one of prox, linops, fb-quadratic, pd-tiny-tv, oracle-stats)")]
    UnknownSuite(String),
}

impl From<stoprox_core::solvers::SolveFailure> for Error {
    fn from(f: stoprox_core::solvers::SolveFailure) -> Self {
        Error::Solve(Box::new(f))
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, message: message.into() }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }
}

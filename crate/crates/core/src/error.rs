use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unisolvency error: {have} points available, polynomial space needs {need}")]
    Unisolvency { have: usize, need: usize },

    #[error("singular stencil at point {point}: {reason}")]
    SingularStencil { point: usize, reason: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("preconditioner setup error: {0}")]
    PreconditionerSetup(String),

    #[error("solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A design target cannot be reached with any admissible parameter.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The configuration sits on a singular limit of the model.
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// No Gaussian eigenmode exists for the requested cavity.
    #[error("unstable cavity: {0}")]
    Unstable(String),

    #[error("scan resolution too coarse: {0}")]
    ScanResolution(String),

    #[error("unknown {family} `{name}` (known: {known})")]
    UnknownStrategy {
        family: &'static str,
        name: String,
        known: String,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid trace: {0}")]
    Trace(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of a numerical procedure on otherwise valid input
    /// (infeasible targets, singular problems, unstable cavities).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::Degenerate(_) | Error::Unstable(_)
        )
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

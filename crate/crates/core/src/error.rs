use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An annotation failed a schema or domain check.
    #[error("validation error: {0}")]
    Validation(String),

    /// A schema violation tied to a line of an input file (1-based).
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("stream order: frame {frame} does not follow frame {last}")]
    StreamOrder { frame: u64, last: u64 },

    #[error("no frames")]
    NoFrames,

    #[error("no centroids")]
    NoCentroids,

    #[error("no points")]
    NoPoints,

    #[error("all clusters are empty")]
    AllClustersEmpty,

    #[error("empty population")]
    EmptyPopulation,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

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

    /// Process exit code: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

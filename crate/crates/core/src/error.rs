use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a RIFF/WAVE file: {0}")]
    NotWav(String),
    #[error("unsupported codec: {0}")]
    UnsupportedCodec(String),
    #[error("truncated data chunk: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("all-zero activation: no pitch estimate (unvoiced)")]
    Unvoiced,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("backward pass requires a train-mode forward cache")]
    MissingCache,
    #[error("loss diverged (non-finite) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("weights blob truncated: expected {expected} bytes, found {found}")]
    TruncatedWeights { expected: usize, found: usize },
    #[error("no voiced frames available for sampling")]
    NoVoicedFrames,
    #[error("need at least {needed} distinct groups, found {found}")]
    TooFewGroups { needed: usize, found: usize },
    #[error("zero-power {0}")]
    ZeroPower(&'static str),
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}

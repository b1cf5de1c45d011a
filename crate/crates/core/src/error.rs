use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("line {line}: elapsed time {value} does not increase past {previous}")]
    NonMonotonicTime { line: usize, previous: f64, value: f64 },

    #[error("line {line}: field `{field}` = {value} is out of range")]
    OutOfRange {
        line: usize,
        field: &'static str,
        value: f64,
    },

    #[error("trajectory has {0} points, at least 2 are required")]
    TooShort(usize),

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("labels reference bird `{0}` which has no trajectory")]
    UnknownBirdInLabels(String),

    #[error("duplicate bird id `{0}`")]
    DuplicateBird(String),

    #[error("quantile of an empty series")]
    EmptySeries,

    #[error("no velocities to pool for the {0} subset")]
    EmptyPool(&'static str),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("labels are degenerate: {0}")]
    DegenerateLabels(String),

    #[error("only one class present, pairs or thresholds are undefined")]
    SingleClass,

    #[error("class {class} has {count} instances, fewer than the {k} folds requested")]
    TooFewPerClass { class: u8, count: usize, k: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("prediction sets cover different birds")]
    BirdSetMismatch,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing artifact {0}; run the upstream command first")]
    MissingArtifact(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Whether the error stems from bad input data or configuration rather
    /// than a failure of the program itself.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::InFile { source, .. } => source.is_data_error(),
            Error::Io(e) => matches!(
                e.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::InvalidData | std::io::ErrorKind::PermissionDenied
            ),
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error("non-finite sample at channel {channel}, index {index}")]
    NonFiniteSample { channel: String, index: usize },

    #[error("unknown channel label `{0}` (montage validation is on)")]
    UnknownChannelLabel(String),

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("epoch at offset {offset} with length {length} exceeds recording length {available}")]
    OffsetOutOfRange {
        offset: usize,
        length: usize,
        available: usize,
    },

    #[error("{offsets} offsets supplied for {count} epochs")]
    CountMismatch { count: usize, offsets: usize },

    #[error("degenerate Higuchi scale: k={k}, start={start}, series length {len}")]
    DegenerateScale { k: usize, start: usize, len: usize },

    #[error("constant series has no defined fractal dimension")]
    ConstantSeries,

    #[error("sample entropy undefined: A={a}, B={b}")]
    NoTemplateMatches { a: u64, b: u64 },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("feature `{0}` has zero variance")]
    ZeroVarianceFeature(String),

    #[error("feature names do not match: expected {expected:?}, got {found:?}")]
    FeatureNameMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("input contains a single class")]
    SingleClassInput,

    #[error("optimizer did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("K={k} exceeds row count {rows}")]
    KTooLarge { k: usize, rows: usize },

    #[error("circulant embedding has negative eigenvalue {0:e}")]
    EmbeddingFailure(f64),

    #[error("calibration of {statistic} failed: target {target} outside achievable range [{low}, {high}]")]
    CalibrationFailure {
        statistic: String,
        target: f64,
        low: f64,
        high: f64,
    },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("subject {subject}, channel {channel}, epoch {epoch}: {source}")]
    Feature {
        subject: String,
        channel: String,
        epoch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::MalformedFile {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by invalid user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

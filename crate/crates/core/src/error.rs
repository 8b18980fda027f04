use std::path::PathBuf;

/// Errors produced by loaders, matrix builders, and the recovery pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("duplicate phone symbol {0:?}")]
    DuplicatePhone(String),
    #[error("no feature vector for phone {0:?}")]
    MissingFeatures(String),
    #[error("feature vector for phone {0:?} is all zeros")]
    ZeroFeatureVector(String),
    #[error("unknown phone symbol {0:?}")]
    UnknownPhone(String),
    #[error("empty pronunciation for word {0:?}")]
    EmptyPronunciation(String),
    #[error("token {0:?} is not in the lexicon")]
    OovToken(String),
    #[error("phone index {index} out of range for {dim}-phone cost matrix")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("cost matrices have mismatched dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("invalid costs: {0}")]
    InvalidCosts(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("utterance id mismatch: normal {normal:?} vs oov {oov:?}")]
    UttIdMismatch { normal: String, oov: String },
    #[error("utterance {0:?} appears in the report but not in the ground truth")]
    UnknownUtterance(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}

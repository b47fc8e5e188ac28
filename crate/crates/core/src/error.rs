use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Header field of a PGM file, used to point parse errors at the culprit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmField {
    Magic,
    Width,
    Height,
    Maxval,
}

impl std::fmt::Display for PgmField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PgmField::Magic => "magic",
            PgmField::Width => "width",
            PgmField::Height => "height",
            PgmField::Maxval => "maxval",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported PGM variant {0:?} (only binary P5 is supported)")]
    UnsupportedPgmVariant(String),

    #[error("malformed PGM header: bad or missing {field}")]
    PgmHeader { field: PgmField },

    #[error("unsupported PGM maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),

    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    TruncatedPixelData { expected: usize, found: usize },

    #[error("image is {width}x{height}, must be at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },

    #[error("invalid image buffer: {0}")]
    InvalidImage(String),

    #[error("pyramid level {level} would be {width}x{height}, below the 3x3 minimum")]
    PyramidTooDeep { level: usize, width: usize, height: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("code map is empty")]
    EmptyCodeMap,

    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("singular system in collaborative representation solve; use lambda > 0")]
    SingularSystem,

    #[error("dataset error at {path}: {reason}")]
    Dataset { path: PathBuf, reason: String },

    #[error("fold {fold} has no training items of class {class:?}")]
    StarvedFold { fold: usize, class: String },

    #[error("paired records do not share keys; missing: {}", .0.join(", "))]
    KeyMismatch(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("multi-channel label image ({channels} channels)")]
    MultiChannel { channels: u8 },

    #[error("unsupported label bit depth {bits} (at most 16 bits per pixel)")]
    BitDepth { bits: u16 },

    #[error("label value {0} does not fit in a 16-bit PNG")]
    LabelOverflow(u32),

    #[error("invalid dimensions {height}x{width}")]
    InvalidDimensions { height: usize, width: usize },

    #[error("buffer holds {actual} values, expected {expected}")]
    BufferSize { expected: usize, actual: usize },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ranking needs at least 2 teams, got {0}")]
    TooFewTeams(usize),

    #[error("ranking needs at least one case")]
    NoCases,

    #[error("insufficient shared cases for teams {a} and {b}: {shared} < {required}")]
    InsufficientSharedCases {
        a: String,
        b: String,
        shared: usize,
        required: usize,
    },

    #[error("all paired differences are zero")]
    AllDifferencesZero,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("marker {label} at ({row}, {col}) lies outside the foreground")]
    MarkerOutsideForeground { label: u32, row: usize, col: usize },

    #[error("label {label} at ({row}, {col}) lies outside the foreground")]
    LabelOutsideForeground { label: u32, row: usize, col: usize },

    #[error("pixel ({row}, {col}) is not covered by any tile")]
    UncoveredPixel { row: usize, col: usize },

    #[error("tile at ({row}, {col}) of size {height}x{width} exceeds the canvas")]
    TileOutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("channel count mismatch: expected {expected}, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("malformed dense map: {0}")]
    DenseFormat(String),

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
}

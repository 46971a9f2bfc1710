//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} values, got {actual}")]
    BadLength { expected: usize, actual: usize },

    #[error("value {value} at index {index} outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f64 },

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("sparse frame indices must be strictly increasing (index {index} repeated or out of order)")]
    IndexOrder { index: usize },

    #[error("sequence has no frames")]
    EmptySequence,

    #[error("operation requires a dense sequence")]
    NotDense,

    #[error("operation requires a sparse sequence")]
    NotSparse,

    #[error("frame rate must be positive and finite, got {fps}")]
    BadFps { fps: f64 },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("AU index {index} outside 0..=23")]
    BadIndex { index: i64 },

    #[error("intensity {value} outside [0, 1]")]
    BadIntensity { value: f64 },

    #[error("unknown emotion label {label:?}")]
    UnknownEmotion { label: String },

    #[error("response has no recognizable `<emotion>, [` header")]
    NoEmotionHeader,

    #[error("no complete frames recoverable from response")]
    NoFrames,

    #[error("downsampling phase {phase} outside sequence of {len} frames")]
    BadPhase { phase: usize, len: usize },

    #[error("1/gamma must round to an integer stride >= 1, got gamma {gamma}")]
    BadGamma { gamma: f64 },

    #[error("shape mismatch: {message}")]
    ShapeMismatch { message: String },

    #[error("raster dimensions {width}x{height} too small (minimum 8x8)")]
    BadDimensions { width: usize, height: usize },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}", .left.0, .left.1, .right.0, .right.1)]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("image {width}x{height} smaller than the {window}x{window} filter window")]
    TooSmall {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input is empty")]
    EmptyInput,

    #[error("corrupt file: {message}")]
    CorruptFile { message: String },

    #[error("schema error: {message}")]
    SchemaError { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    pub fn corrupt(message: impl Into<String>) -> Self {
        Error::CorruptFile {
            message: message.into(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Error::SchemaError {
            message: message.into(),
        }
    }

    pub fn shape(message: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            message: message.into(),
        }
    }
}

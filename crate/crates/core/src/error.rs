use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the eye-parameter pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("image is empty")]
    EmptyImage,

    #[error("pixel buffer has {actual} entries, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("rectangle {rect:?} does not fit inside a {width}x{height} image")]
    RectOutOfBounds {
        rect: [usize; 4],
        width: usize,
        height: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("histogram has no segmentable structure")]
    DegenerateHistogram,

    #[error("no pupil region")]
    NoPupil,

    #[error("degenerate gaze: pupil and eye centers coincide")]
    DegenerateGaze,

    #[error("degenerate calibration: design matrix is rank deficient")]
    DegenerateCalibration,

    #[error("bank cannot separate the training samples")]
    BankCannotSeparate,

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("tension window error: {0}")]
    TensionWindow(String),

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("malformed structuring element: {0}")]
    StructuringElement(String),

    #[error("malformed report: {0}")]
    Report(String),

    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use crate::labels::LabelError;

/// Errors produced by the core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported or corrupt image: {0}")]
    UnsupportedImage(String),

    #[error("image dimensions must be at least 1x1 (got {width}x{height})")]
    EmptyImage { width: usize, height: usize },

    #[error("pixel buffer length {actual} does not match {width}x{height}")]
    BufferSize {
        width: usize,
        height: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel {kernel_w}x{kernel_h} is larger than image {image_w}x{image_h}")]
    KernelTooLarge {
        kernel_w: usize,
        kernel_h: usize,
        image_w: usize,
        image_h: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("seed ({x}, {y}) is outside the {width}x{height} image")]
    SeedOutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("degenerate histogram: image has fewer than two distinct intensities")]
    DegenerateHistogram,

    #[error("invalid contour: {0}")]
    InvalidContour(String),

    #[error(transparent)]
    Label(#[from] LabelError),

    #[error("{path}: {source}")]
    LabelFile {
        path: PathBuf,
        #[source]
        source: LabelError,
    },

    #[error("malformed dataset descriptor {path}, line {line}: {message}")]
    Descriptor {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset has {} problem(s):\n{}", .0.len(), .0.join("\n"))]
    Dataset(Vec<String>),

    #[error("mixed classes in one matching call ({0} and {1})")]
    MixedClasses(usize, usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

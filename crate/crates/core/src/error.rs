use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline phase that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Segment,
    Prefill,
    Inpaint,
    Restore,
    Insert,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Segment => "segment",
            Stage::Prefill => "prefill",
            Stage::Inpaint => "inpaint",
            Stage::Restore => "restore",
            Stage::Insert => "insert",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed png: {0}")]
    MalformedPng(String),
    #[error("unsupported png bit depth {0} (expected 8 or 16)")]
    UnsupportedBitDepth(u8),
    #[error("png encoding failed: {0}")]
    Encode(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?} (height, width)")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("empty region: {0}")]
    EmptyRegion(&'static str),
    #[error("image {height}x{width} is smaller than the {window}x{window} window")]
    ImageTooSmall {
        height: usize,
        width: usize,
        window: usize,
    },

    #[error("unknown backend {id:?}; valid ids: \"harmonic\", \"remote:<url>\"")]
    UnknownBackend { id: String },
    #[error("network error talking to {endpoint}: {message}")]
    Network { endpoint: String, message: String },
    #[error("remote returned status {status}: {message}")]
    RemoteStatus { status: u16, message: String },
    #[error("remote returned an invalid payload: {0}")]
    InvalidPayload(String),
    #[error("remote returned a {found:?} image for a {expected:?} request (height, width)")]
    RemoteDimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("logo does not fit inside the host: {0}")]
    LogoTooLarge(String),
    #[error("coverage {target:.3} unattainable (closest {achieved:.4})")]
    CoverageUnattainable { target: f64, achieved: f64 },
    #[error("no orange pixels found")]
    NoOrangePixels,

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage attribution.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

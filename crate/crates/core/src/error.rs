use std::path::PathBuf;

/// Errors produced by the spatial audio toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty signal")]
    EmptySignal,

    #[error("all-zero signal cannot be normalized")]
    SilentSignal,

    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    SampleRateMismatch { expected: u32, found: u32 },

    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("speaker array is rank deficient (rank {rank}, need 4)")]
    RankDeficient { rank: usize },

    #[error("pixel ({u}, {v}) lies outside the image frame")]
    OutOfFrame { u: f64, v: f64 },

    #[error("direction (azimuth {azimuth} rad, elevation {elevation} rad) lies outside the field of view")]
    OutOfFov { azimuth: f64, elevation: f64 },

    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("invalid STFT configuration: {0}")]
    InvalidStft(String),

    #[error("invalid HRIR pack: {0}")]
    InvalidPack(String),

    #[error("duplicate HRIR direction (azimuth {azimuth_deg} deg, elevation {elevation_deg} deg)")]
    DuplicateDirection { azimuth_deg: f64, elevation_deg: f64 },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("clip not found: {0}")]
    MissingClip(String),

    #[error("scene {index} failed: {source}")]
    Scene {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed spectrogram file: {0}")]
    MalformedSpectrogram(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::EmptySignal => "empty-signal",
            Error::SilentSignal => "silent-signal",
            Error::SampleRateMismatch { .. } => "sample-rate-mismatch",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::ShapeMismatch { .. } => "shape-mismatch",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::OutOfFrame { .. } => "out-of-frame",
            Error::OutOfFov { .. } => "out-of-fov",
            Error::SignalTooShort { .. } => "signal-too-short",
            Error::InvalidStft(_) => "invalid-stft",
            Error::InvalidPack(_) => "invalid-pack",
            Error::DuplicateDirection { .. } => "duplicate-direction",
            Error::InvalidScene(_) => "invalid-scene",
            Error::MissingClip(_) => "missing-clip",
            Error::Scene { .. } => "scene",
            Error::MalformedSpectrogram(_) => "malformed-spectrogram",
            Error::Io { .. } => "io",
            Error::Wav { .. } => "wav",
            Error::Json { .. } => "json",
        }
    }
}

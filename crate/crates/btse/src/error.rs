use thiserror::Error;

/// Crate-wide error type.
///
/// Variants follow the failure taxonomy used across the library: `Format`
/// for malformed files (WAV headers, weight bundles, JSON manifests),
/// `Argument` for violated preconditions, `Shape` for dimension mismatches,
/// `Lookup` for missing registry/store entries, `Metric` for undefined
/// metric inputs and `Silent` for operations that cannot work on silence.
#[derive(Debug, Error)]
pub enum Error {
    // The cause is embedded in the Display text rather than exposed as
    // `source()`: chain printers would otherwise repeat it.
    #[error("i/o error: {0}")]
    Io(std::io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("silent signal: {0}")]
    Silent(String),

    #[error("json error: {0}")]
    Json(serde_json::Error),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

/// Errors produced by the modem, the channel model, the recovery pipeline
/// and the IQ file codec.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("spreading factor {0} outside 7..=12")]
    InvalidSpreadingFactor(u8),
    #[error("symbol {value} out of range for {n_chips} chips")]
    InvalidSymbol { value: usize, n_chips: usize },
    #[error("buffer length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("payload of {0} bytes exceeds 255")]
    PayloadTooLong(usize),
    #[error("{0} symbols do not frame a whole packet")]
    Framing(usize),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("{path}: bad magic {found:02x?}")]
    BadMagic { path: PathBuf, found: [u8; 4] },
    #[error("{path}: truncated, header declares {declared} samples but payload holds {available}")]
    TruncatedFile {
        path: PathBuf,
        declared: u64,
        available: u64,
    },
    #[error("{path}: unsupported version {version}")]
    VersionUnsupported { path: PathBuf, version: u16 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

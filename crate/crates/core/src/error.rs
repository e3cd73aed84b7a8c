//! Error type shared by every stage of the receiver chain.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array configuration: {0}")]
    InvalidArray(String),
    #[error("angle {0}° outside [0°, 180°]")]
    AngleOutOfRange(f64),
    #[error("derivative order {0} not supported (max 2)")]
    UnsupportedDerivative(usize),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid wavelength {0} m")]
    InvalidWavelength(f64),
    #[error("Hadamard order {0} outside [0, 16]")]
    HadamardOrder(u32),
    #[error("invalid codeword rows: {0}")]
    InvalidCodeRows(String),
    #[error("symbol must be +1 or -1, got {0}")]
    InvalidSymbol(i8),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("no signal subspace above rank tolerance")]
    NoSignalSubspace,
    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied configuration.
    pub fn is_config(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Csv { .. } | Error::NonFinite | Error::NoSignalSubspace
        )
    }
}

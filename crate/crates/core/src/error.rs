use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported layout: {0}")]
    UnsupportedLayout(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),

    #[error("invalid target size: {0}")]
    InvalidTarget(String),

    #[error("insufficient samples: {samples} colour samples for {components} components")]
    InsufficientSamples { samples: usize, components: usize },

    #[error("DegenerateTrimap: {0}")]
    DegenerateTrimap(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid threshold {0}: must lie in [0, 255]")]
    InvalidThreshold(f64),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid flow network: {0}")]
    InvalidNetwork(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

/// Errors raised by the simulation and dataset pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {class_id}: {reason}")]
    ClassGeneration { class_id: usize, reason: String },

    #[error("malformed PNG at byte {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("pixel {pixel} has value {value}, expected 0 or 255")]
    NonBinaryPixel { pixel: usize, value: u8 },

    #[error("PNG encoding failed: {0}")]
    Encode(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

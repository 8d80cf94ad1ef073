use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt WAV header: {0}")]
    CorruptHeader(String),
    #[error("missing intermediate file: {}", .0.display())]
    MissingIntermediate(PathBuf),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Analysis(#[from] isa_rhythm_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl From<hound::Error> for Error {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::IoError(e) => Error::Io(e),
            hound::Error::FormatError(msg) => Error::CorruptHeader(msg.to_string()),
            hound::Error::Unsupported => Error::UnsupportedFormat("encoding not supported".into()),
            hound::Error::InvalidSampleFormat => {
                Error::UnsupportedFormat("sample format does not match the header".into())
            }
            other => Error::CorruptHeader(other.to_string()),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::Io(e),
            kind => Error::Csv(format!("{kind:?}")),
        }
    }
}

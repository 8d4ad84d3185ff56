use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("ADC dimensioning violated: {0}")]
    Dimensioning(String),
    #[error("value {value} out of range for 8-bit port `{port}` (integer range 0 to 255)")]
    Range { port: String, value: i64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("commit rejected: {0}")]
    Commit(String),
    #[error("stream aborted at frame {frame}: {cause}")]
    StreamAborted { frame: usize, cause: Box<Error> },
    #[error("no reference record for {0}")]
    Lookup(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

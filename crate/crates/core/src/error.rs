use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("code block size {0} is not in the LTE turbo interleaver table")]
    UnsupportedBlockSize(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("internal defect: {0}")]
    Defect(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {value} is outside a field of size {size}")]
    OutOfField { value: u64, size: u128 },

    #[error("value {value} is outside the dictionary [0, {d})")]
    OutOfDictionary { value: u64, d: u64 },

    #[error("{0} is not a prime modulus usable for hashing")]
    NotPrime(u64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix has rank {rank} but {cols} columns; reconstruction is impossible")]
    Singular { rank: usize, cols: usize },

    #[error("no reports to aggregate")]
    EmptyReports,

    #[error("alpha {alpha} outside the valid range [0, {max}]")]
    AlphaOutOfRange { alpha: f64, max: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dataset is empty after ingestion")]
    EmptyDataset,

    #[error("inconsistent trials: {0}")]
    Inconsistent(String),

    #[error("unknown algorithm label {0:?}")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

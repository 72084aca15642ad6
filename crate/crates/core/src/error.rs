use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("label set too small: n = {0} (need 3 <= n <= 63)")]
    LabelCount(usize),
    #[error("label {label} out of range 1..={n}")]
    Label { label: usize, n: usize },
    #[error("unstable partition: {0}")]
    UnstablePartition(String),
    #[error("label sets differ: n = {0} vs n = {1}")]
    Mismatch(usize, usize),
    #[error("not a stable tree: {0}")]
    InvalidTree(String),
    #[error("edge is not present in the tree")]
    NoSuchEdge,
    #[error("invalid flag selection: {0}")]
    InvalidFlags(String),
    #[error("degree mismatch: {0}")]
    Degree(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inconsistent linear system: {0}")]
    Inconsistent(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

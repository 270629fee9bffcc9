use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("pole collision: {0}")]
    PoleCollision(String),
    #[error("enclosure error: {0}")]
    Enclosure(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("word length cap {0} exceeded")]
    DepthCap(usize),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("undecided comparison: {0}")]
    Undecided(String),
    #[error("unknown: {0}")]
    Unknown(String),
}

pub type Result<T> = std::result::Result<T, Error>;

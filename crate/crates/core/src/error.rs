use thiserror::Error;

use crate::perm::Point;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("two points share row {0}")]
    RowCollision(u8),
    #[error("two points share column {0}")]
    ColCollision(u8),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("ground sizes differ: {0} vs {1}")]
    MismatchedGround(usize, usize),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("family is not intersecting")]
    NotIntersecting,
    #[error("constraint conflict: {0}")]
    ConstraintConflict(String),
    #[error("size {0} exceeds the cap of {1}")]
    TooLarge(usize, usize),
    #[error("formula evaluators disagree: {0}")]
    InternalMismatch(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("family is not a subfamily of the ambient space (offending point set contains {0:?})")]
    NotSubfamily(Option<Point>),
    #[error("family is not {0}-spread")]
    NotSpread(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::fmt;
use std::process::ExitCode;

/// A run that did not succeed, classified by exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// An assertable invariant failed; exit 1.
    Invariant(String),
    /// Bad parameters or inputs; exit 2.
    Config(String),
    /// Two independent evaluators disagree; exit 3.
    Mismatch(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Invariant(_) => 1,
            Failure::Config(_) => 2,
            Failure::Mismatch(_) => 3,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invariant(m) => write!(f, "invariant failure: {m}"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Mismatch(m) => write!(f, "internal mismatch: {m}"),
        }
    }
}

impl From<permdiv::Error> for Failure {
    fn from(e: permdiv::Error) -> Self {
        match e {
            permdiv::Error::InternalMismatch(_) => Failure::Mismatch(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

//! Error classes and the exit codes they map to.

use std::fmt;

use vortrap::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad configuration or arguments.
    Config,
    /// Unreadable or malformed input/output file.
    Data,
    /// An internal cross-check failed or a computation did not converge.
    Numerical,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Numerical => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn config(e: Error) -> Self {
        e.into()
    }

    pub fn io(what: impl fmt::Display, e: impl fmt::Display) -> Self {
        Self::new(Kind::Data, format!("{what}: {e}"))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Domain(_) | Error::UnsupportedRange(_) | Error::OutOfRange(_) => Kind::Config,
            Error::Parse { .. } | Error::Io { .. } => Kind::Data,
            Error::Convergence(_) | Error::StepSize(_) | Error::Consistency(_) | Error::NonFinite(_) => Kind::Numerical,
        };
        Self::new(kind, e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_codes() {
        let code = |e: Error| CliError::from(e).kind.exit_code();
        assert_eq!(code(Error::Domain("x".into())), 2);
        assert_eq!(code(Error::UnsupportedRange("x".into())), 2);
        assert_eq!(code(Error::Io { path: "p".into(), message: "m".into() }), 3);
        assert_eq!(code(Error::Parse { path: "p".into(), line: 1, message: "m".into() }), 3);
        assert_eq!(code(Error::Consistency("x".into())), 4);
        assert_eq!(code(Error::StepSize("x".into())), 4);
        assert_eq!(code(Error::Convergence("x".into())), 4);
    }
}

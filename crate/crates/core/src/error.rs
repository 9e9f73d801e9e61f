//! Error taxonomy shared by the library and the command-line front end.
//!
//! Errors are split by *who is at fault*: how the tool was invoked
//! ([`Error::Usage`]), the problem data itself ([`Error::Data`] and the
//! specific data variants), or the numerics ([`Error::Numerics`] variants).
//! [`Error::exit_code`] maps this onto the sysexits-style process codes the
//! CLI contract promises.

use thiserror::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// The command line (or a programmatic call) asked for something the
    /// tool does not do: unknown catalog name, malformed spectral parameter,
    /// contradictory flags.
    #[error("usage: {0}")]
    Usage(String),

    /// Problem data is syntactically readable but semantically invalid:
    /// non-positive coefficient values, decreasing tables, empty support.
    #[error("invalid problem data: {0}")]
    Data(String),

    /// Problem JSON could not be parsed at all.
    #[error("cannot parse problem description: {0}")]
    Json(#[from] serde_json::Error),

    /// File-system trouble while reading a problem description.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    /// The requested operation needs a hypothesis this problem violates,
    /// e.g. a sign-definite potential for the factorization routes or a
    /// strictly positive principal solution.
    #[error("unsupported for this problem: {0}")]
    Unsupported(String),

    /// An adaptive numerical process failed to reach its tolerance within
    /// its budget (quadrature subdivision, step-size collapse, truncation
    /// radius stall).
    #[error("numerics: {0}")]
    Numerics(String),
}

impl Error {
    /// Construct a [`Error::Usage`] from anything displayable.
    pub fn usage(msg: impl std::fmt::Display) -> Self {
        Error::Usage(msg.to_string())
    }

    /// Construct a [`Error::Data`] from anything displayable.
    pub fn data(msg: impl std::fmt::Display) -> Self {
        Error::Data(msg.to_string())
    }

    /// Construct a [`Error::Unsupported`] from anything displayable.
    pub fn unsupported(msg: impl std::fmt::Display) -> Self {
        Error::Unsupported(msg.to_string())
    }

    /// Construct a [`Error::Numerics`] from anything displayable.
    pub fn numerics(msg: impl std::fmt::Display) -> Self {
        Error::Numerics(msg.to_string())
    }

    /// Process exit code for this error under the CLI contract:
    /// `64` for usage errors, `65` for invalid or unsupported problem data,
    /// `70` for numeric failures (and i/o, which the caller cannot
    /// distinguish from a truncated input).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 64,
            Error::Data(_) | Error::Json(_) | Error::Unsupported(_) => 65,
            Error::Io(_) => 66,
            Error::Numerics(_) => 70,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(Error::usage("x").exit_code(), 64);
        assert_eq!(Error::data("x").exit_code(), 65);
        assert_eq!(Error::unsupported("x").exit_code(), 65);
        assert_eq!(Error::numerics("x").exit_code(), 70);
        let json_err = serde_json::from_str::<serde_json::Value>("{").unwrap_err();
        assert_eq!(Error::from(json_err).exit_code(), 65);
    }
}

//! Crate-wide error type and result alias.
//!
//! Errors are grouped by who is at fault:
//!
//! * [`Error::Domain`] — an argument is outside the mathematical domain of an
//!   operation (negative time, non-positive mode index, divergent tail
//!   configuration, …).
//! * [`Error::Resolution`] — an operation needs more spatial resolution than
//!   the declared grid provides (e.g. a product of fields whose combined
//!   frequency band exceeds grid capacity).
//! * [`Error::Contract`] — a precondition linking several arguments failed
//!   (mismatched bases, state not drawn from the declared mode set, …).
//! * [`Error::Config`] — the experiment description is malformed or
//!   inconsistent (unknown keys, out-of-range parameters).
//! * [`Error::Invariant`] — a runtime structural check failed: a verification
//!   suite found a violated identity.
//! * [`Error::Io`] — reading inputs or writing outputs failed.
//!
//! The CLI maps these to exit codes: everything that stems from the problem
//! description (`Domain`, `Resolution`, `Contract`, `Config`) exits 2, failed
//! verification (`Invariant`) exits 3, and I/O failures exit 4.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the library and CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Declared spatial resolution is insufficient for the request.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A precondition linking several arguments failed.
    #[error("contract error: {0}")]
    Contract(String),

    /// Invalid or inconsistent experiment description.
    #[error("config error: {0}")]
    Config(String),

    /// A structural identity failed at runtime.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// File input/output failure.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Builds an [`Error::Domain`] from anything displayable.
    pub fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }

    /// Builds an [`Error::Resolution`] from anything displayable.
    pub fn resolution(msg: impl fmt::Display) -> Self {
        Error::Resolution(msg.to_string())
    }

    /// Builds an [`Error::Contract`] from anything displayable.
    pub fn contract(msg: impl fmt::Display) -> Self {
        Error::Contract(msg.to_string())
    }

    /// Builds a [`Error::Config`] from anything displayable.
    pub fn config(msg: impl fmt::Display) -> Self {
        Error::Config(msg.to_string())
    }

    /// Builds an [`Error::Invariant`] from anything displayable.
    pub fn invariant(msg: impl fmt::Display) -> Self {
        Error::Invariant(msg.to_string())
    }

    /// Builds an [`Error::Io`] from anything displayable.
    pub fn io(msg: impl fmt::Display) -> Self {
        Error::Io(msg.to_string())
    }

    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Resolution(_) | Error::Contract(_) | Error::Config(_) => 2,
            Error::Invariant(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RtnError {
    /// A parameter lies outside the range an operation supports.
    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    /// An explicit dense object would exceed a size cap.
    #[error("resource cap exceeded: {what} needs {needed} entries, cap is {cap}")]
    Resource {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    /// Two objects that must agree in size do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An argument failed validation.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// A contraction produced a value that cannot enter a logarithm.
    #[error("numeric degeneracy: {0}")]
    Degenerate(String),
}

pub type RtnResult<T> = Result<T, RtnError>;

pub(crate) fn check_cap(what: &'static str, needed: u128, cap: u128) -> RtnResult<()> {
    if needed > cap {
        Err(RtnError::Resource { what, needed, cap })
    } else {
        Ok(())
    }
}

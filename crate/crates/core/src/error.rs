use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed input: overlapping blocks, bad label sets, out-of-range indices.
    #[error("validation error: {0}")]
    Validation(String),
    /// Parameters outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// Enumeration or table size over the configured cap.
    #[error("capacity error: {what} = {requested} exceeds cap {cap}")]
    Capacity {
        what: &'static str,
        requested: usize,
        cap: usize,
    },
    /// Quadrature failure, division by zero, non-finite intermediate.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A Lévy kernel whose derived split probabilities are not a probability law.
    #[error("kernel inconsistency: {0}")]
    KernelInconsistency(String),
}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

pub(crate) fn check_cap(what: &'static str, requested: usize, cap: usize) -> Result<()> {
    if requested > cap {
        Err(Error::Capacity {
            what,
            requested,
            cap,
        })
    } else {
        Ok(())
    }
}

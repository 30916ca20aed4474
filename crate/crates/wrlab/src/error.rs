use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("region has {sites} sites but exact enumeration is capped at {cap}")]
    EnumerationCap { sites: usize, cap: usize },

    #[error("{0} is only defined for the soft-core model")]
    UnsupportedVariant(&'static str),

    #[error("a priori measure ({0}, {1}, {2}) has no (lambda, h) representation")]
    Unrepresentable(f64, f64, f64),

    #[error("comparison series diverges: c = {0} >= 1")]
    Divergent(f64),

    #[error("comparison series not converged after {order} terms (tail bound {tail:e})")]
    Truncated { order: usize, tail: f64 },

    #[error("no phase-transition certificate exists: {0}")]
    NoCertificate(String),

    #[error("degenerate conditioning: {0}")]
    Degenerate(String),

    #[error("a cluster touching the kernel volume reaches the window edge")]
    WindowEscape,

    #[error("size error: {0}")]
    Size(String),
}

impl Error {
    /// True for errors caused by malformed input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Size(_) | Error::EnumerationCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

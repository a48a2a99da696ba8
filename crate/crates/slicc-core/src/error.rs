use core::fmt;

/// Errors surfaced by the core library. Construction-time validation only;
/// hot paths never allocate or fail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SliccError {
    /// A game matrix was empty or ragged.
    BadMatrix { rows: usize, cols: usize },
    /// A configuration field was out of range.
    BadConfig(&'static str),
    /// A dimension did not match what the component was built with.
    DimMismatch { expected: usize, got: usize },
    /// An input carried NaN or an infinity.
    NonFinite(&'static str),
    /// An operation was applied to a state it is not valid in.
    BadState(&'static str),
}

impl fmt::Display for SliccError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliccError::BadMatrix { rows, cols } => {
                write!(f, "bad game matrix: {rows}x{cols}")
            }
            SliccError::BadConfig(what) => write!(f, "bad config: {what}"),
            SliccError::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            SliccError::NonFinite(what) => write!(f, "non-finite {what}"),
            SliccError::BadState(what) => write!(f, "bad state: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SliccError {}

use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArwError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("site {0:?} lies outside the window")]
    OutsideWindow(Vec<i64>),

    #[error("region is not contained in {0}")]
    RegionNotContained(&'static str),

    #[error("illegal toppling at stable site {0:?}")]
    IllegalToppling(Vec<i64>),

    #[error("empty sample")]
    EmptySample,

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, ArwError>;

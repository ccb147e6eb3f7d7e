use arw_core::ArwError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ArwError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// How a finished command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Violation,
    BudgetExceeded,
}

impl Verdict {
    pub fn code(self) -> u8 {
        match self {
            Verdict::Pass => 0,
            Verdict::Violation => 1,
            Verdict::BudgetExceeded => 3,
        }
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Violation
        }
    }

    /// Budget trumps violation.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::BudgetExceeded, _) | (_, Verdict::BudgetExceeded) => Verdict::BudgetExceeded,
            (Verdict::Violation, _) | (_, Verdict::Violation) => Verdict::Violation,
            _ => Verdict::Pass,
        }
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Core(ArwError::BudgetExceeded(_)) => 3,
            _ => 2,
        }
    }
}

use std::fmt;

use thiserror::Error;

/// Location and message of a syntax error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),

    #[error("term is not closed; free variables: {0}")]
    OpenTerm(String),

    #[error("expected a value, found `{0}`")]
    NotAValue(String),

    #[error("reduction is stuck on `{0}`")]
    Stuck(String),

    #[error("total mass {0} exceeds 1")]
    MassOverflow(String),

    #[error("frontier grew past {limit} states at round {round}")]
    FrontierCap { limit: usize, round: u64 },

    #[error("term grew past {limit} nodes at round {round}")]
    TermSizeCap { limit: usize, round: u64 },

    #[error("big-step memo grew past {limit} term nodes")]
    MemoCap { limit: usize },

    #[error("not a finite distribution term: {0}")]
    NotFdt(String),

    #[error("distribution cannot be built from a finite choice tree: {0}")]
    NotRepresentable(String),

    #[error("support contains a non-numeral value `{0}`")]
    NonNumeral(String),

    #[error("precision budget of {0} stages exhausted before a split was certified")]
    SplitBudget(u32),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("invalid number `{0}`")]
    Number(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("flip sequence exhausted after {0} flips")]
    FlipsExhausted(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

use crate::funcparse::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error("agent index {agent} out of range for {agents} agents")]
    AgentIndex { agent: usize, agents: usize },

    #[error("good index {good} out of range for {goods} goods")]
    GoodIndex { good: usize, goods: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("enumeration budget exceeded: n^m = {agents}^{goods} = {count} allocations, budget is {budget}")]
    Capacity {
        agents: usize,
        goods: usize,
        /// Decimal rendering of n^m; may exceed any machine integer.
        count: String,
        budget: u64,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("negative utility {value} for agent {agent}, good {good}")]
    NegativeUtility {
        agent: usize,
        good: usize,
        value: String,
    },

    #[error("invalid welfare function: {0}")]
    InvalidFunction(String),

    #[error(transparent)]
    Expression(#[from] ParseError),

    #[error(transparent)]
    Evaluation(#[from] EvalError),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the exhaustive search budget rather than bad input.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

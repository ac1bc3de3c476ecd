use std::fmt;

use thiserror::Error;

/// A malformed formula or KB line, located by 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("duplicate axiom id `{0}`")]
    DuplicateId(String),
    #[error("unknown section header `[{name}]` at line {line}")]
    UnknownSection { line: usize, name: String },
}

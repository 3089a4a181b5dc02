use thiserror::Error;

/// Source text falls outside the accepted grammar.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SyntaxError at line {line}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            line,
            message: message.into(),
        }
    }
}

/// Code parsed but breaks a structural rule (placeholder placement, assignment targets).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ValidationError at line {line}: {message}")]
pub struct ValidationError {
    pub line: usize,
    pub message: String,
}

impl ValidationError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ValidationError {
            line,
            message: message.into(),
        }
    }
}

/// Evaluation failed. `line` is the 1-based line of the innermost statement.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("RuntimeError at line {line}: {message}")]
pub struct RuntimeError {
    pub line: usize,
    pub message: String,
}

impl RuntimeError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        RuntimeError {
            line,
            message: message.into(),
        }
    }
}

/// The action executor asked the interpreter to stop. The executor keeps the reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("execution halted by the action executor")]
pub struct Halt;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Halted(#[from] Halt),
}

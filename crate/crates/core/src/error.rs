use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    SymbolUnknown(String),
    #[error("{op}() needs an even ghost-0 argument, got `{arg}`")]
    BadTranscendental { op: &'static str, arg: String },
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("needs the completion by infinite sums: {0}")]
    CompletionRequired(String),
    #[error("grading violation: {0}")]
    Grading(String),
    #[error("not symplectic: {0}")]
    NotSymplectic(String),
    #[error("non-invertible Jacobian: {0}")]
    SingularJacobian(String),
    #[error("twist obstruction: {0}")]
    TwistObstruction(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

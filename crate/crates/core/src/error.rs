use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("chain file line {line}: {msg}")]
    ChainParse { line: usize, msg: String },

    #[error("task dimension {rows} exceeds joint count {cols}")]
    TooManyRows { rows: usize, cols: usize },

    #[error("condition number undefined for an all-zero matrix")]
    ZeroMatrix,

    #[error("matrix not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("unknown solver `{0}`")]
    UnknownSolver(String),

    #[error("unknown chain `{0}`")]
    UnknownChain(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. The message text of several variants is part of
/// the public contract and asserted in tests.
#[derive(Debug, Error)]
pub enum Error {
    #[error("order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),

    #[error("vertex id out of range: {id} (vertex count {n})")]
    VertexOutOfRange { id: usize, n: usize },

    #[error("negative cycle")]
    NegativeCycle,

    #[error("checkpoint corrupt")]
    CheckpointCorrupt,

    #[error("checkpoint does not match this job: {0}")]
    CheckpointMismatch(String),

    #[error("no workers available")]
    NoWorkersAvailable,

    #[error("task {task_id} failed: {message}")]
    TaskFailed { task_id: u64, message: String },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

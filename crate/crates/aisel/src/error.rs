use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("layer dimension chain broken: layer {index} has in_dim {in_dim}, previous out_dim {prev_out}")]
    DimChain {
        index: usize,
        in_dim: usize,
        prev_out: usize,
    },
    #[error("invalid layer spec: {0}")]
    InvalidLayer(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("not a probability vector: {0}")]
    NotSimplex(String),
    #[error("label index {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("brute-force search space too large: {0} candidate designs")]
    SearchSpaceOverflow(u128),
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("bad idx file: {0}")]
    Idx(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Two tensor shapes that were required to conform do not.
    #[error("shape mismatch in {context}: {left:?} vs {right:?}")]
    ShapeMismatch {
        context: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// A scenario, sweep or training configuration violates an invariant.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// No path exists between the requested endpoints.
    #[error("no route from node {src} to node {dst}")]
    NoRoute { src: u32, dst: u32 },

    /// A text input (dataset, model file, config file) failed to parse.
    /// `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A model and a dataset (or two models) disagree on dimensions.
    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    /// Dataset cannot support the requested operation (empty, single-class, ...).
    #[error("unusable dataset: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(context: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::ShapeMismatch {
            context,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] tdp_core::Error),
    #[error("tensor operation failed: {0}")]
    Tensor(#[from] candle::Error),
    #[error("tokenizer: {0}")]
    Tokenizer(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint {}: {reason}", .path.display())]
    Checkpoint { path: PathBuf, reason: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("training diverged at epoch {epoch}, step {step}: loss is {loss}")]
    Diverged { epoch: usize, step: usize, loss: f64 },
    #[error("gold row ({parent}, {label}) missing from the candidates of {child}")]
    MissingGold { child: String, parent: String, label: String },
    #[error("{0}")]
    Empty(&'static str),
}

impl From<tokenizers::Error> for Error {
    fn from(e: tokenizers::Error) -> Self {
        Error::Tokenizer(e.to_string())
    }
}

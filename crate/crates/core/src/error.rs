use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("invalid UTF-8 at byte offset {offset}")]
    Encoding { offset: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("word {word:?} contains symbol {symbol:?} outside the vocabulary alphabet")]
    UnknownSymbol { word: String, symbol: char },

    #[error("invalid vocabulary: {0}")]
    Vocab(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate vector: cosine is undefined for a zero-norm vector")]
    DegenerateVector,

    #[error("no prediction for sample {sample_id}, candidate {candidate_index}")]
    MissingPrediction {
        sample_id: usize,
        candidate_index: usize,
    },

    #[error("training error: {0}")]
    Training(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("sample {sample_id}: {source}")]
    Sample {
        sample_id: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn in_sample(self, sample_id: usize) -> Self {
        match self {
            e @ Error::Sample { .. } => e,
            e => Error::Sample {
                sample_id,
                source: Box::new(e),
            },
        }
    }
}

//! Statistical resources behind the baseline features: an n-gram language
//! model with frequency quartiles, and an IBM Model 1 lexical table.

mod model1;
mod ngram;

pub use model1::{train_model1, LexicalTable, NULL_WORD};
pub use ngram::{padded_ngrams, train_ngram, FrequencyQuartiles, NgramModel, QuartileClass, BOS, EOS, UNK};

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("n-gram order must be 1, 2 or 3, got {0}")]
    InvalidOrder(usize),
    #[error("EM needs at least one iteration")]
    ZeroIterations,
    #[error("cannot score an empty token list")]
    EmptyInput,
    #[error("token `{0}` is empty or contains whitespace")]
    InvalidToken(String),
    #[error("expected a `{expected}` document, found `{found}`")]
    Format { expected: &'static str, found: String },
    #[error("corrupt resource: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use std::io;

use thiserror::Error;

use crate::emotion::Emotion;

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("unknown emotion label {0:?}")]
    UnknownEmotion(String),
    #[error("invalid color {0:?}, expected #RRGGBB")]
    InvalidColor(String),
    #[error("{first} and {second} share color {color}")]
    DuplicateColor {
        first: Emotion,
        second: Emotion,
        color: String,
    },
    #[error("probabilities must lie in [0, 1] and sum to 1, got sum {sum}")]
    MalformedDistribution { sum: f64 },
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("need at least {needed} examples to split, got {got}")]
    TooFewExamples { needed: usize, got: usize },
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
    #[error("training split has no example of {0}")]
    MissingClass(Emotion),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch} (last finite loss {last_loss})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        last_loss: f64,
    },
    #[error("cannot evaluate on an empty test set")]
    EmptyTestSet,
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported model format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("{malformed} of {total} lines are malformed (limit 10%)")]
    TooManyMalformed { malformed: usize, total: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("cannot build an index over an empty turn store")]
    EmptyStore,
    #[error("query has no tokens")]
    EmptyQuery,
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error("unknown turn id {0}")]
    UnknownTurn(u32),
    #[error("invalid BM25 parameters k1={k1}, b={b}")]
    InvalidParams { k1: f64, b: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum SuggestionError {
    #[error("no candidate shares a term with the query")]
    NoSuggestion,
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("event at t={got} precedes last event at t={last_seen}")]
    OutOfOrder { last_seen: u64, got: u64 },
    #[error("session log does not end in Send")]
    IncompleteSession,
}

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("ranks {0:?} are not a permutation of 1, 2, 3")]
    NotAPermutation([u8; 3]),
    #[error("item {item} aspect {aspect}: expected {expected} workers, got {got}")]
    WorkerCount {
        item: String,
        aspect: String,
        expected: usize,
        got: usize,
    },
    #[error("item {item}: worker {worker} ranked aspect {aspect} twice")]
    DuplicateWorker {
        item: String,
        worker: String,
        aspect: String,
    },
    #[error("item {0} has rankings but no gold emotion")]
    UnknownItem(String),
    #[error("no evaluation items")]
    Empty,
}

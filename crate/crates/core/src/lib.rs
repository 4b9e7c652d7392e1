//! Emotion-aware message suggestion.
//!
//! The pipeline classifies an in-progress message into one of seven
//! emotions, retrieves alternative responses from a dialog corpus with BM25,
//! optionally restricted to a chosen emotion, and turns the user's swipe and
//! select actions into emotion labels for further training.

pub mod classifier;
pub mod corpus;
pub mod emotion;
pub mod error;
pub mod evaluation;
pub mod retrieval;
pub mod session;
pub mod suggestion;
pub mod tokenize;

pub use classifier::{CnnModel, EmotionAnnotator, LabeledExample, TrainConfig};
pub use corpus::{Message, Turn, TurnStore};
pub use emotion::{rank_emotions, ColorMap, Emotion, EmotionPrediction, Rgb};
pub use error::{
    ClassifierError, CorpusError, EmotionError, EvaluationError, RetrievalError, SessionError, SuggestionError,
};
pub use retrieval::{Bm25Params, InvertedIndex, ScoredTurn};
pub use suggestion::{Suggester, Suggestion, SwipeEntry, SwipePayload};
pub use tokenize::tokenize;

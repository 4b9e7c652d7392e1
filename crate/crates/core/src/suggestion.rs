//! Baseline and emotion-filtered suggestions, and the per-emotion swipe
//! payload shown on the color bar.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifier::EmotionAnnotator;
use crate::corpus::{TurnId, TurnStore};
use crate::emotion::{rank_emotions, Emotion, EmotionPrediction};
use crate::error::{RetrievalError, SuggestionError};
use crate::retrieval::{InvertedIndex, ScoredTurn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    /// Response text of the source turn.
    pub text: String,
    /// Response emotion of the source turn.
    pub emotion: Emotion,
    pub source_turn_id: TurnId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwipeEntry {
    pub emotion: Emotion,
    pub suggestion: Option<Suggestion>,
}

/// One entry per emotion, in descending order of the typed text's
/// predicted probability. Emotions without a suggestion keep an empty slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwipePayload {
    pub prediction: EmotionPrediction,
    pub entries: Vec<SwipeEntry>,
}

impl SwipePayload {
    pub fn order(&self) -> Vec<Emotion> {
        self.entries.iter().map(|e| e.emotion).collect()
    }

    pub fn filled_slots(&self) -> usize {
        self.entries.iter().filter(|e| e.suggestion.is_some()).count()
    }
}

/// Read-only suggestion engine over an immutable store, index and model.
#[derive(Clone)]
pub struct Suggester {
    store: Arc<TurnStore>,
    index: Arc<InvertedIndex>,
    classifier: Arc<dyn EmotionAnnotator>,
}

impl Suggester {
    pub fn new(store: Arc<TurnStore>, index: Arc<InvertedIndex>, classifier: Arc<dyn EmotionAnnotator>) -> Self {
        Suggester {
            store,
            index,
            classifier,
        }
    }

    pub fn store(&self) -> &TurnStore {
        &self.store
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn classify(&self, text: &str) -> EmotionPrediction {
        self.classifier.predict(text)
    }

    fn to_suggestion(&self, hit: ScoredTurn) -> Suggestion {
        let turn = self.store.turn(hit.turn).expect("index and store built together");
        Suggestion {
            text: self.store.response(turn).text.clone(),
            emotion: turn.response_emotion,
            source_turn_id: hit.turn,
            score: hit.score,
        }
    }

    fn top1(&self, received_text: &str, filter: Option<Emotion>) -> Result<Suggestion, SuggestionError> {
        let hits = self.index.search(received_text, 1, filter)?;
        hits.into_iter()
            .next()
            .map(|h| self.to_suggestion(h))
            .ok_or(SuggestionError::NoSuggestion)
    }

    /// Response of the best-matching turn, ignoring emotion.
    pub fn suggest_baseline(&self, received_text: &str) -> Result<Suggestion, SuggestionError> {
        self.top1(received_text, None)
    }

    /// Response of the best-matching turn whose response carries `emotion`.
    pub fn suggest_with_emotion(&self, received_text: &str, emotion: Emotion) -> Result<Suggestion, SuggestionError> {
        self.top1(received_text, Some(emotion))
    }

    pub fn build_swipe_payload(&self, received_text: &str, typed_text: &str) -> SwipePayload {
        let prediction = self.classifier.predict(typed_text);
        let order = rank_emotions(&prediction).expect("classifier output is a distribution");
        let entries = order
            .into_iter()
            .map(|emotion| {
                let suggestion = match self.suggest_with_emotion(received_text, emotion) {
                    Ok(s) => Some(s),
                    Err(SuggestionError::NoSuggestion | SuggestionError::Retrieval(RetrievalError::EmptyQuery)) => {
                        None
                    }
                    Err(e) => unreachable!("top_k is fixed at 1: {e}"),
                };
                SwipeEntry { emotion, suggestion }
            })
            .collect();
        SwipePayload { prediction, entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ingest_reader;
    use crate::retrieval::Bm25Params;

    /// Predicts from a fixed keyword table, uniform otherwise.
    struct Keywords;
    impl EmotionAnnotator for Keywords {
        fn predict(&self, text: &str) -> EmotionPrediction {
            let t = text.to_lowercase();
            if t.contains("why don't") {
                let mut p = [0.02; 7];
                p[Emotion::Anger.code()] = 0.5;
                p[Emotion::Sadness.code()] = 0.3;
                p[Emotion::Fear.code()] = 0.1;
                EmotionPrediction::from_scores(p).unwrap()
            } else {
                EmotionPrediction::uniform()
            }
        }
    }

    const CORPUS: &str = "\
d1\tA\t1\twhy don't you come?\tneutral
d1\tB\t2\tthen tell me why you don't come!\tanger
d2\tA\t1\tyou never come to the party\tneutral
d2\tB\t2\tohhhh why cannot you come?\tsadness
d3\tA\t1\tare you coming tonight\tneutral
d3\tB\t2\tI am fine, see you there\tjoy
";

    fn suggester(corpus: &str) -> Suggester {
        let (store, _) = ingest_reader(corpus.as_bytes(), None).unwrap();
        let index = InvertedIndex::build(&store, Bm25Params::default()).unwrap();
        Suggester::new(Arc::new(store), Arc::new(index), Arc::new(Keywords))
    }

    #[test]
    fn baseline_returns_response_of_best_match() {
        let s = suggester(CORPUS);
        let got = s.suggest_baseline("why don't you come?").unwrap();
        assert_eq!(got.text, "then tell me why you don't come!");
        assert_eq!(got.emotion, Emotion::Anger);
        assert_eq!(got.source_turn_id, TurnId(0));
        assert_eq!(s.suggest_baseline("zzzz"), Err(SuggestionError::NoSuggestion));
    }

    #[test]
    fn emotion_filter_selects_matching_response() {
        let s = suggester(CORPUS);
        let sad = s.suggest_with_emotion("why don't you come?", Emotion::Sadness).unwrap();
        assert_eq!(sad.text, "ohhhh why cannot you come?");
        assert_eq!(sad.emotion, Emotion::Sadness);
        assert_eq!(
            s.suggest_with_emotion("why don't you come?", Emotion::Fear),
            Err(SuggestionError::NoSuggestion)
        );
        // Filtering is a no-op when the unfiltered winner already matches.
        let anger = s.suggest_with_emotion("why don't you come?", Emotion::Anger).unwrap();
        assert_eq!(anger, s.suggest_baseline("why don't you come?").unwrap());
        assert!(s.suggest_baseline("you come").unwrap().score >= sad.score);
    }

    #[test]
    fn equal_scores_prefer_lower_turn_id() {
        let corpus = "a\tA\t1\thello\na\tB\t2\tfirst\nb\tA\t1\thello\nb\tB\t2\tsecond\n";
        let s = suggester(corpus);
        assert_eq!(s.suggest_baseline("hello").unwrap().text, "first");
    }

    #[test]
    fn payload_follows_prediction_order() {
        let s = suggester(CORPUS);
        let payload = s.build_swipe_payload("why don't you come?", "Why don't you come?");
        let order = payload.order();
        assert_eq!(&order[..3], &[Emotion::Anger, Emotion::Sadness, Emotion::Fear]);
        assert_eq!(order, rank_emotions(&payload.prediction).unwrap().to_vec());
        // Responses exist for anger, sadness and joy only.
        assert_eq!(payload.filled_slots(), 3);
        assert!(payload.entries[2].suggestion.is_none());
        for entry in &payload.entries {
            if let Some(sug) = &entry.suggestion {
                assert_eq!(sug.emotion, entry.emotion);
            }
        }
    }

    #[test]
    fn uniform_prediction_gives_canonical_order_and_empty_received_gives_empty_slots() {
        let s = suggester(CORPUS);
        let payload = s.build_swipe_payload("", "");
        assert_eq!(payload.order(), Emotion::ALL.to_vec());
        assert_eq!(payload.filled_slots(), 0);
        assert_eq!(payload.entries.len(), 7);
    }

    #[test]
    fn two_emotion_corpus_fills_two_slots() {
        let corpus = "a\tA\t1\tsee you\na\tB\t2\tyay\tjoy\nb\tA\t1\tsee me\nb\tB\t2\tugh\ttired\n";
        let s = suggester(corpus);
        let payload = s.build_swipe_payload("see", "anything");
        assert_eq!(payload.filled_slots(), 2);
    }
}

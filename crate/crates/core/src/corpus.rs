//! Dialog corpus ingestion and turn construction.
//!
//! The corpus file has one message per line:
//! `dialog_id<TAB>sender_id<TAB>timestamp_ms<TAB>text[<TAB>gold_emotion]`,
//! ordered by dialog and then by time. A turn pairs every message with the
//! most recent earlier message in the same dialog from a different sender.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::classifier::EmotionAnnotator;
use crate::emotion::Emotion;
use crate::error::CorpusError;

/// Fraction of malformed lines above which ingestion aborts.
pub const MALFORMED_LIMIT: f64 = 0.10;

/// Dense turn index, rendered as `t<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TurnId(pub u32);

impl Serialize for TurnId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TurnId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for TurnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl std::str::FromStr for TurnId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('t').unwrap_or(s).parse().map(TurnId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Gold,
    Predicted,
    /// No gold label and no classifier available; defaults to neutral.
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    /// `dialog_id:position`, unique corpus-wide.
    pub id: String,
    pub dialog_id: String,
    pub sender_id: String,
    pub text: String,
    pub timestamp: u64,
    pub emotion: Emotion,
    pub label_source: LabelSource,
}

/// One parsed corpus line, before annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMessage {
    pub dialog_id: String,
    pub sender_id: String,
    pub timestamp: u64,
    pub text: String,
    pub gold: Option<Emotion>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCorpus {
    pub messages: Vec<RawMessage>,
    pub lines: usize,
    pub malformed: usize,
}

fn parse_line(line: &str) -> Result<RawMessage, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if !(4..=5).contains(&fields.len()) {
        return Err(format!("expected 4 or 5 tab-separated fields, got {}", fields.len()));
    }
    if fields[0].is_empty() || fields[1].is_empty() {
        return Err("empty dialog or sender id".into());
    }
    let timestamp = fields[2]
        .trim()
        .parse::<u64>()
        .map_err(|e| format!("bad timestamp {:?}: {e}", fields[2]))?;
    let gold = match fields.get(4).map(|s| s.trim()) {
        None | Some("") => None,
        Some(label) => Some(label.parse::<Emotion>().map_err(|e| e.to_string())?),
    };
    Ok(RawMessage {
        dialog_id: fields[0].to_string(),
        sender_id: fields[1].to_string(),
        timestamp,
        text: fields[3].to_string(),
        gold,
    })
}

/// Parses the corpus, skipping malformed lines. A timestamp that goes
/// backwards within a dialog counts as malformed. Aborts when more than
/// [`MALFORMED_LIMIT`] of the non-blank lines are malformed.
pub fn parse_dialog_corpus<R: BufRead>(reader: R) -> Result<ParsedCorpus, CorpusError> {
    let mut messages: Vec<RawMessage> = Vec::new();
    let mut last_time: std::collections::HashMap<String, u64> = std::collections::HashMap::new();
    let mut lines = 0;
    let mut malformed = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        lines += 1;
        let parsed = parse_line(line).and_then(|m| match last_time.get(&m.dialog_id) {
            Some(&prev) if m.timestamp < prev => Err(format!("timestamp {} goes backwards (previous {prev})", m.timestamp)),
            _ => Ok(m),
        });
        match parsed {
            Ok(m) => {
                last_time.insert(m.dialog_id.clone(), m.timestamp);
                messages.push(m);
            }
            Err(reason) => {
                warn!(line = i + 1, %reason, "skipping malformed corpus line");
                malformed += 1;
            }
        }
    }
    if lines > 0 && malformed as f64 > MALFORMED_LIMIT * lines as f64 {
        return Err(CorpusError::TooManyMalformed {
            malformed,
            total: lines,
        });
    }
    Ok(ParsedCorpus {
        messages,
        lines,
        malformed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub id: TurnId,
    /// Index into [`TurnStore::messages`].
    pub received: usize,
    pub response: usize,
    pub received_emotion: Emotion,
    pub response_emotion: Emotion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialog {
    pub id: String,
    /// Message indices in time order.
    pub messages: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: usize,
    pub malformed: usize,
    pub messages: usize,
    pub dialogs: usize,
    pub turns: usize,
    pub gold_labels: usize,
    pub predicted_labels: usize,
    pub missing_labels: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TurnStore {
    messages: Vec<Message>,
    dialogs: Vec<Dialog>,
    turns: Vec<Turn>,
}

impl TurnStore {
    /// Groups messages into dialogs (in order of first appearance), labels
    /// each message (gold label first, then the annotator's top emotion)
    /// and pairs turns.
    pub fn build(raw: Vec<RawMessage>, annotator: Option<&dyn EmotionAnnotator>) -> TurnStore {
        let mut store = TurnStore::default();
        let mut dialog_index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
        for m in raw {
            let d = *dialog_index.entry(m.dialog_id.clone()).or_insert_with(|| {
                store.dialogs.push(Dialog {
                    id: m.dialog_id.clone(),
                    messages: Vec::new(),
                });
                store.dialogs.len() - 1
            });
            let (emotion, label_source) = match (m.gold, annotator) {
                (Some(gold), _) => (gold, LabelSource::Gold),
                (None, Some(a)) => (a.predict(&m.text).top(), LabelSource::Predicted),
                (None, None) => (Emotion::Neutral, LabelSource::Missing),
            };
            let dialog = &mut store.dialogs[d];
            store.messages.push(Message {
                id: format!("{}:{}", m.dialog_id, dialog.messages.len()),
                dialog_id: m.dialog_id,
                sender_id: m.sender_id,
                text: m.text,
                timestamp: m.timestamp,
                emotion,
                label_source,
            });
            dialog.messages.push(store.messages.len() - 1);
        }

        for dialog in &store.dialogs {
            // other[i]: most recent position before i whose sender differs.
            let mut other: Vec<Option<usize>> = Vec::with_capacity(dialog.messages.len());
            for (pos, &mi) in dialog.messages.iter().enumerate() {
                let pred = if pos == 0 {
                    None
                } else {
                    let prev = dialog.messages[pos - 1];
                    if store.messages[prev].sender_id != store.messages[mi].sender_id {
                        Some(pos - 1)
                    } else {
                        other[pos - 1]
                    }
                };
                other.push(pred);
                if let Some(p) = pred {
                    let received = dialog.messages[p];
                    store.turns.push(Turn {
                        id: TurnId(store.turns.len() as u32),
                        received,
                        response: mi,
                        received_emotion: store.messages[received].emotion,
                        response_emotion: store.messages[mi].emotion,
                    });
                }
            }
        }
        store
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn dialogs(&self) -> &[Dialog] {
        &self.dialogs
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn turn(&self, id: TurnId) -> Option<&Turn> {
        self.turns.get(id.0 as usize)
    }

    pub fn received(&self, turn: &Turn) -> &Message {
        &self.messages[turn.received]
    }

    pub fn response(&self, turn: &Turn) -> &Message {
        &self.messages[turn.response]
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn stats(&self, parsed_lines: usize, malformed: usize) -> IngestStats {
        let count = |s: LabelSource| self.messages.iter().filter(|m| m.label_source == s).count();
        IngestStats {
            lines: parsed_lines,
            malformed,
            messages: self.messages.len(),
            dialogs: self.dialogs.len(),
            turns: self.turns.len(),
            gold_labels: count(LabelSource::Gold),
            predicted_labels: count(LabelSource::Predicted),
            missing_labels: count(LabelSource::Missing),
        }
    }
}

pub fn ingest_reader<R: BufRead>(
    reader: R,
    annotator: Option<&dyn EmotionAnnotator>,
) -> Result<(TurnStore, IngestStats), CorpusError> {
    let parsed = parse_dialog_corpus(reader)?;
    let (lines, malformed) = (parsed.lines, parsed.malformed);
    let store = TurnStore::build(parsed.messages, annotator);
    let stats = store.stats(lines, malformed);
    Ok((store, stats))
}

pub fn ingest_corpus(
    path: impl AsRef<Path>,
    annotator: Option<&dyn EmotionAnnotator>,
) -> Result<(TurnStore, IngestStats), CorpusError> {
    ingest_reader(BufReader::new(File::open(path)?), annotator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::EmotionPrediction;

    fn store(corpus: &str) -> TurnStore {
        ingest_reader(corpus.as_bytes(), None).unwrap().0
    }

    fn pairs(s: &TurnStore) -> Vec<(&str, &str)> {
        s.turns()
            .iter()
            .map(|t| (s.received(t).text.as_str(), s.response(t).text.as_str()))
            .collect()
    }

    #[test]
    fn pairs_with_most_recent_other_sender() {
        let s = store("d1\tA\t1\thi\nd1\tB\t2\thello\nd1\tB\t3\tthere\n");
        assert_eq!(pairs(&s), [("hi", "hello"), ("hi", "there")]);
        for t in s.turns() {
            let (r, p) = (s.received(t), s.response(t));
            assert_eq!(r.dialog_id, p.dialog_id);
            assert_ne!(r.sender_id, p.sender_id);
            assert!(r.timestamp <= p.timestamp);
        }
    }

    #[test]
    fn degenerate_dialogs_make_no_turns() {
        assert!(store("d1\tA\t1\thi\n").is_empty());
        assert!(store("d1\tA\t1\thi\nd1\tA\t2\tyo\n").is_empty());
    }

    #[test]
    fn turns_do_not_cross_dialogs() {
        let s = store("d1\tA\t1\ta\nd2\tB\t2\tb\nd1\tA\t3\tc\nd2\tC\t4\td\n");
        assert_eq!(pairs(&s), [("b", "d")]);
        assert_eq!(s.messages()[2].id, "d1:1");
    }

    #[test]
    fn longer_exchange() {
        let s = store("d\tA\t1\ta1\nd\tB\t2\tb1\nd\tA\t3\ta2\nd\tA\t4\ta3\nd\tB\t5\tb2\n");
        assert_eq!(pairs(&s), [("a1", "b1"), ("b1", "a2"), ("b1", "a3"), ("a3", "b2")]);
    }

    #[test]
    fn gold_labels_override_annotator() {
        struct AlwaysJoy;
        impl EmotionAnnotator for AlwaysJoy {
            fn predict(&self, _: &str) -> EmotionPrediction {
                EmotionPrediction::one_hot(Emotion::Joy)
            }
        }
        let corpus = "d\tA\t1\twhy?\tanger\nd\tB\t2\tbecause\n";
        let (s, stats) = ingest_reader(corpus.as_bytes(), Some(&AlwaysJoy)).unwrap();
        assert_eq!(s.turns()[0].received_emotion, Emotion::Anger);
        assert_eq!(s.turns()[0].response_emotion, Emotion::Joy);
        assert_eq!((stats.gold_labels, stats.predicted_labels), (1, 1));
        let (s, stats) = ingest_reader(corpus.as_bytes(), None).unwrap();
        assert_eq!(s.turns()[0].response_emotion, Emotion::Neutral);
        assert_eq!(stats.missing_labels, 1);
    }

    #[test]
    fn malformed_lines_are_skipped_up_to_the_limit() {
        let mut corpus = String::new();
        for i in 0..19 {
            corpus.push_str(&format!("d\t{}\t{i}\tmsg {i}\n", if i % 2 == 0 { "A" } else { "B" }));
        }
        corpus.push_str("broken line\n");
        let (s, stats) = ingest_reader(corpus.as_bytes(), None).unwrap();
        assert_eq!(stats.malformed, 1);
        assert_eq!(stats.lines, 20);
        assert_eq!(s.messages().len(), 19);

        corpus.push_str("d\tA\tnot-a-time\tx\nd\tA\t5\tx\tgrumpy\n");
        match ingest_reader(corpus.as_bytes(), None) {
            Err(CorpusError::TooManyMalformed { malformed: 3, total: 22 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn backwards_timestamp_is_malformed() {
        let corpus = "d\tA\t10\ta\nd\tB\t5\tb\nd\tB\t11\tc\n".repeat(1);
        let parsed = parse_dialog_corpus(corpus.as_bytes());
        assert!(matches!(parsed, Err(CorpusError::TooManyMalformed { malformed: 1, total: 3 })));
    }

    #[test]
    fn turn_id_display_and_parse() {
        assert_eq!(TurnId(12).to_string(), "t12");
        assert_eq!("t12".parse::<TurnId>().unwrap(), TurnId(12));
    }
}

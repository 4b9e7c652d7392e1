//! Inverted index and BM25 ranking over the received side of each turn.
//!
//! ```text
//! score(q, d) = Σ_{t ∈ q ∩ d} idf(t) · tf · (k1 + 1) / (tf + k1 · (1 − b + b · dl / avgdl))
//! idf(t)      = ln((N − df + 0.5) / (df + 0.5) + 1)
//! ```
//!
//! Query terms are deduplicated, so a repeated query word counts once.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{TurnId, TurnStore};
use crate::emotion::Emotion;
use crate::error::RetrievalError;
use crate::tokenize::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if !(self.k1.is_finite() && self.k1 >= 0.0 && (0.0..=1.0).contains(&self.b)) {
            return Err(RetrievalError::InvalidParams { k1: self.k1, b: self.b });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub turn: TurnId,
    pub tf: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredTurn {
    pub turn: TurnId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    /// Postings sorted by turn id.
    postings: HashMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    response_emotions: Vec<Emotion>,
    avgdl: f64,
    params: Bm25Params,
}

impl InvertedIndex {
    /// Indexes the tokenized received message of every turn.
    pub fn build(store: &TurnStore, params: Bm25Params) -> Result<Self, RetrievalError> {
        params.validate()?;
        if store.is_empty() {
            return Err(RetrievalError::EmptyStore);
        }
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(store.len());
        let mut response_emotions = Vec::with_capacity(store.len());
        for turn in store.turns() {
            let tokens = tokenize(&store.received(turn).text);
            doc_lengths.push(tokens.len() as u32);
            response_emotions.push(turn.response_emotion);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, count) in tf {
                // Turns are visited in id order, so lists stay sorted.
                postings.entry(term).or_default().push(Posting {
                    turn: turn.id,
                    tf: count,
                });
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avgdl = total as f64 / doc_lengths.len() as f64;
        Ok(InvertedIndex {
            postings,
            doc_lengths,
            response_emotions,
            avgdl,
            params,
        })
    }

    /// Number of indexed turns.
    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_length(&self, turn: TurnId) -> Option<u32> {
        self.doc_lengths.get(turn.0 as usize).copied()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.document_frequency(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn term_weight(&self, idf: f64, tf: u32, doc_len: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = f64::from(tf);
        let length_ratio = if self.avgdl > 0.0 {
            f64::from(doc_len) / self.avgdl
        } else {
            0.0
        };
        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * length_ratio))
    }

    /// BM25 score of one turn for already-tokenized query terms.
    pub fn bm25_score<S: AsRef<str>>(&self, query: &[S], turn: TurnId) -> Result<f64, RetrievalError> {
        let doc_len = self.doc_length(turn).ok_or(RetrievalError::UnknownTurn(turn.0))?;
        let mut score = 0.0;
        for term in distinct(query) {
            let list = self.postings(term);
            if let Ok(pos) = list.binary_search_by_key(&turn, |p| p.turn) {
                score += self.term_weight(self.idf(term), list[pos].tf, doc_len);
            }
        }
        Ok(score)
    }

    /// Turns sharing at least one token with `query`, optionally restricted
    /// to a response emotion, by descending score then ascending turn id.
    pub fn search(
        &self,
        query: &str,
        top_k: usize,
        filter: Option<Emotion>,
    ) -> Result<Vec<ScoredTurn>, RetrievalError> {
        if top_k == 0 {
            return Err(RetrievalError::InvalidTopK);
        }
        let tokens = tokenize(query);
        if tokens.is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let mut scores: HashMap<TurnId, f64> = HashMap::new();
        for term in distinct(&tokens) {
            let idf = self.idf(term);
            for p in self.postings(term) {
                if filter.is_some_and(|e| self.response_emotions[p.turn.0 as usize] != e) {
                    continue;
                }
                let w = self.term_weight(idf, p.tf, self.doc_lengths[p.turn.0 as usize]);
                *scores.entry(p.turn).or_insert(0.0) += w;
            }
        }
        let mut ranked: Vec<ScoredTurn> = scores
            .into_iter()
            .map(|(turn, score)| ScoredTurn { turn, score })
            .collect();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.turn.cmp(&b.turn)));
        ranked.truncate(top_k);
        Ok(ranked)
    }
}

/// Distinct terms in first-appearance order.
fn distinct<S: AsRef<str>>(terms: &[S]) -> impl Iterator<Item = &str> {
    let mut seen = HashSet::new();
    terms
        .iter()
        .map(AsRef::as_ref)
        .filter(move |t| seen.insert(*t))
}

use std::sync::Arc;

use emosuggest_core::classifier::load_model;
use emosuggest_core::corpus::{ingest_corpus, IngestStats};
use emosuggest_core::{
    Bm25Params, ClassifierError, CorpusError, EmotionAnnotator, InvertedIndex, RetrievalError, Suggester, TurnStore,
};
use tracing::info;

use crate::config::ServiceConfig;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("model: {0}")]
    Model(#[from] ClassifierError),
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("index: {0}")]
    Index(#[from] RetrievalError),
}

/// Immutable model, turn store and index. Replaced as a whole on reload.
pub struct Engine {
    suggester: Suggester,
    stats: Option<IngestStats>,
}

impl Engine {
    pub fn new(
        store: TurnStore,
        annotator: Arc<dyn EmotionAnnotator>,
        bm25: Bm25Params,
    ) -> Result<Self, EngineError> {
        let index = InvertedIndex::build(&store, bm25)?;
        Ok(Engine {
            suggester: Suggester::new(Arc::new(store), Arc::new(index), annotator),
            stats: None,
        })
    }

    /// Loads the model, then ingests the corpus with it labeling any
    /// messages that have no gold label.
    pub fn load(config: &ServiceConfig) -> Result<Self, EngineError> {
        let model = Arc::new(load_model(&config.model)?);
        let (store, stats) = ingest_corpus(&config.corpus, Some(model.as_ref()))?;
        info!(turns = stats.turns, messages = stats.messages, malformed = stats.malformed, "corpus ingested");
        let mut engine = Engine::new(store, model, config.bm25)?;
        engine.stats = Some(stats);
        Ok(engine)
    }

    pub fn suggester(&self) -> &Suggester {
        &self.suggester
    }

    pub fn stats(&self) -> Option<&IngestStats> {
        self.stats.as_ref()
    }

    pub fn turns(&self) -> usize {
        self.suggester.store().len()
    }
}

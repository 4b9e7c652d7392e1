//! Built-in demo: a small gold-labeled dialog corpus (50 turns) and a
//! classifier trained on its messages.

use std::sync::Arc;

use emosuggest_core::classifier::{train, TrainReport};
use emosuggest_core::corpus::ingest_reader;
use emosuggest_core::{Bm25Params, ClassifierError, CnnModel, LabeledExample, TrainConfig, TurnStore};
use emosuggest_service::{Engine, EngineError};

pub const DEMO_CORPUS: &str = include_str!("../data/demo_corpus.tsv");

pub fn demo_store() -> TurnStore {
    ingest_reader(DEMO_CORPUS.as_bytes(), None).expect("demo corpus is well formed").0
}

/// Every demo message with its gold label.
pub fn demo_examples() -> Vec<LabeledExample> {
    demo_store()
        .messages()
        .iter()
        .map(|m| LabeledExample::new(m.text.clone(), m.emotion))
        .collect()
}

/// Smaller than the defaults so the demo trains in a few seconds.
pub fn demo_train_config() -> TrainConfig {
    TrainConfig {
        embed_dim: 16,
        seq_len: 16,
        learning_rate: 5e-3,
        epochs: 40,
        batch_size: 8,
        ..TrainConfig::default()
    }
}

pub fn train_demo_model(config: &TrainConfig) -> Result<(CnnModel, TrainReport), ClassifierError> {
    let examples = demo_examples();
    train(&examples, &[], config)
}

pub fn demo_engine(model: CnnModel) -> Result<Engine, EngineError> {
    Engine::new(demo_store(), Arc::new(model), Bm25Params::default())
}

//! From-scratch convolutional emotion classifier.

mod data;
mod evaluate;
mod io;
mod model;
mod train;
mod vocab;

pub use data::{
    read_labeled, sanitize_field, split_dataset, write_labeled, DatasetSplit, LabeledExample, DEFAULT_SPLIT,
};
pub use evaluate::{evaluate, AccuracyReport, ClassTally};
pub use io::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use model::{CnnModel, ConvBank, Parameters, FEATURES, FILTERS_PER_WIDTH, FILTER_WIDTHS};
pub use train::{train, EpochStats, TrainConfig, TrainReport};
pub use vocab::{Vocabulary, PAD_ID, UNK_ID};

use crate::emotion::EmotionPrediction;

/// Anything that can assign an emotion distribution to a text.
pub trait EmotionAnnotator: Send + Sync {
    fn predict(&self, text: &str) -> EmotionPrediction;
}

impl EmotionAnnotator for CnnModel {
    fn predict(&self, text: &str) -> EmotionPrediction {
        self.predict_text(text)
    }
}

impl<T: EmotionAnnotator + ?Sized> EmotionAnnotator for std::sync::Arc<T> {
    fn predict(&self, text: &str) -> EmotionPrediction {
        (**self).predict(text)
    }
}

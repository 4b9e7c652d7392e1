use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::data::LabeledExample;
use super::evaluate::evaluate_encoded;
use super::model::{CnnModel, Parameters, FEATURES};
use super::vocab::Vocabulary;
use crate::emotion::Emotion;
use crate::error::ClassifierError;
use crate::tokenize::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub seq_len: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Probability of keeping a pooled feature during training.
    pub dropout_keep: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embed_dim: 64,
            seq_len: 40,
            learning_rate: 1e-3,
            epochs: 30,
            batch_size: 32,
            seed: 42,
            dropout_keep: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_string()));
        if self.embed_dim == 0 {
            return bad("embed_dim must be positive");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return bad("dropout_keep must be in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
    pub valid_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters were kept; 0 means the initial model.
    pub best_epoch: usize,
    pub skipped_examples: usize,
}

/// Adam optimizer state.
struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Parameters,
    v: Parameters,
}

impl Adam {
    fn new(lr: f64, shape: &Parameters) -> Self {
        let mut m = shape.clone();
        m.fill(0.0);
        let v = m.clone();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m,
            v,
        }
    }

    fn update(&mut self, params: &mut Parameters, grads: &Parameters) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for (((p, g), m), v) in tensors {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

pub(crate) fn encode_all(model: &CnnModel, examples: &[LabeledExample]) -> Vec<(Vec<u32>, Emotion)> {
    examples
        .iter()
        .map(|ex| (model.encode(&ex.text), ex.label))
        .collect()
}

/// Trains a fresh model with mini-batch Adam on mean cross-entropy.
///
/// The vocabulary comes from `train` only. After every epoch the model is
/// scored on `valid` (or on `train` when `valid` is empty) and the earliest
/// best-scoring parameters are returned.
pub fn train(
    train: &[LabeledExample],
    valid: &[LabeledExample],
    config: &TrainConfig,
) -> Result<(CnnModel, TrainReport), ClassifierError> {
    config.validate()?;

    let mut skipped = 0;
    let tokenized: Vec<(Vec<String>, Emotion)> = train
        .iter()
        .filter_map(|ex| {
            let tokens = tokenize(&ex.text);
            if tokens.is_empty() {
                warn!(text = %ex.text, "skipping example with no tokens");
                skipped += 1;
                None
            } else {
                Some((tokens, ex.label))
            }
        })
        .collect();
    for emotion in Emotion::ALL {
        if !tokenized.iter().any(|(_, l)| *l == emotion) {
            return Err(ClassifierError::MissingClass(emotion));
        }
    }

    let vocab = Vocabulary::build(tokenized.iter().map(|(t, _)| t.as_slice()));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = CnnModel::new(vocab, config.embed_dim, config.seq_len, &mut rng)?;

    let train_set: Vec<(Vec<u32>, Emotion)> = tokenized
        .iter()
        .map(|(tokens, label)| (model.vocab().encode(tokens, config.seq_len), *label))
        .collect();
    let valid_set = encode_all(&model, valid);
    let selection_set = if valid_set.is_empty() { &train_set } else { &valid_set };

    let mut optimizer = Adam::new(config.learning_rate, model.params());
    let mut grads = model.params().clone();
    let mut best_model = model.clone();
    let mut best_accuracy = evaluate_encoded(&model, selection_set).overall();
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut last_loss = f64::NAN;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            grads.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let (ids, label) = &train_set[i];
                let mask = dropout_mask(&mut rng, config.dropout_keep);
                batch_loss += model.accumulate_example(ids, *label, mask.as_ref(), scale, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(ClassifierError::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                    last_loss,
                });
            }
            last_loss = batch_loss * scale;
            epoch_loss += batch_loss;
            optimizer.update(model.params_mut(), &grads);
        }

        let train_accuracy = evaluate_encoded(&model, &train_set).overall();
        let valid_accuracy = (!valid_set.is_empty()).then(|| evaluate_encoded(&model, &valid_set).overall());
        let score = valid_accuracy.unwrap_or(train_accuracy);
        let stats = EpochStats {
            epoch,
            mean_loss: epoch_loss / train_set.len() as f64,
            train_accuracy,
            valid_accuracy,
        };
        debug!(?stats, "epoch done");
        history.push(stats);
        if score > best_accuracy {
            best_accuracy = score;
            best_epoch = epoch;
            best_model = model.clone();
        }
    }

    Ok((
        best_model,
        TrainReport {
            epochs: history,
            best_epoch,
            skipped_examples: skipped,
        },
    ))
}

fn dropout_mask<R: Rng>(rng: &mut R, keep: f64) -> Option<[f64; FEATURES]> {
    if keep >= 1.0 {
        return None;
    }
    let mut mask = [0.0; FEATURES];
    for m in &mut mask {
        if rng.random::<f64>() < keep {
            *m = 1.0 / keep;
        }
    }
    Some(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_corpus() -> Vec<LabeledExample> {
        let words = ["mad", "happy", "sad", "scared", "waiting", "sleepy", "okay"];
        let mut out = Vec::new();
        for (code, w) in words.iter().enumerate() {
            for i in 0..3 {
                out.push(LabeledExample::new(
                    format!("I am so {w} today number{i}"),
                    Emotion::from_code(code).unwrap(),
                ));
            }
        }
        out
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            embed_dim: 8,
            seq_len: 8,
            epochs: 3,
            batch_size: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let data = toy_corpus();
        let config = TrainConfig {
            learning_rate: 0.0,
            ..small_config()
        };
        let (model, report) = train(&data, &[], &config).unwrap();
        let tokens: Vec<Vec<String>> = data.iter().map(|e| tokenize(&e.text)).collect();
        let vocab = Vocabulary::build(tokens.iter().map(Vec::as_slice));
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let init = CnnModel::new(vocab, 8, 8, &mut rng).unwrap();
        assert_eq!(model.params(), init.params());
        assert_eq!(report.best_epoch, 0);
        assert_eq!(report.epochs.len(), 3);
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy_corpus();
        let (a, ra) = train(&data, &data[..7], &small_config()).unwrap();
        let (b, rb) = train(&data, &data[..7], &small_config()).unwrap();
        assert_eq!(ra, rb);
        let bits = |m: &CnnModel| -> Vec<u64> {
            m.params().tensors().iter().flat_map(|t| t.iter().map(|v| v.to_bits())).collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn missing_class_is_an_error() {
        let data: Vec<_> = toy_corpus().into_iter().filter(|e| e.label != Emotion::Tired).collect();
        assert!(matches!(
            train(&data, &[], &small_config()),
            Err(ClassifierError::MissingClass(Emotion::Tired))
        ));
    }

    #[test]
    fn empty_examples_are_skipped() {
        let mut data = toy_corpus();
        data.push(LabeledExample::new("   ", Emotion::Joy));
        let (_, report) = train(&data, &[], &small_config()).unwrap();
        assert_eq!(report.skipped_examples, 1);
    }

    #[test]
    fn exploding_learning_rate_aborts() {
        let config = TrainConfig {
            learning_rate: 1e300,
            epochs: 5,
            dropout_keep: 1.0,
            ..small_config()
        };
        match train(&toy_corpus(), &[], &config) {
            Err(ClassifierError::NonFiniteLoss { .. }) => {}
            other => panic!("expected non-finite loss, got {:?}", other.map(|(_, r)| r)),
        }
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            dropout_keep: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            seq_len: 3,
            ..small_config()
        };
        assert!(train(&toy_corpus(), &[], &bad).is_err());
    }
}

//! Convolutional sentence classifier: embedding lookup, one bank of 25
//! filters for each width 1 to 5, ReLU, max-over-time pooling, and an affine
//! softmax layer over the seven emotions.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::vocab::{Vocabulary, PAD_ID};
use crate::emotion::{Emotion, EmotionPrediction};
use crate::error::ClassifierError;
use crate::tokenize::tokenize;

pub const FILTER_WIDTHS: [usize; 5] = [1, 2, 3, 4, 5];
pub const FILTERS_PER_WIDTH: usize = 25;
pub const FEATURES: usize = FILTERS_PER_WIDTH * FILTER_WIDTHS.len();
pub const CLASSES: usize = Emotion::COUNT;
pub const MAX_WIDTH: usize = 5;

/// Filters of a single width. `weights` holds `FILTERS_PER_WIDTH` rows of
/// `width * embed_dim` values, each row laid out position-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBank {
    pub width: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// All trainable tensors. Gradients and optimizer moments share this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// `vocab × embed_dim`, row-major. Row `PAD_ID` is held at zero.
    pub embedding: Vec<f64>,
    pub banks: Vec<ConvBank>,
    /// `FEATURES × CLASSES`, row-major.
    pub output_weights: Vec<f64>,
    pub output_bias: Vec<f64>,
}

impl Parameters {
    pub fn zeros(vocab_size: usize, embed_dim: usize) -> Self {
        Parameters {
            embedding: vec![0.0; vocab_size * embed_dim],
            banks: FILTER_WIDTHS
                .iter()
                .map(|&width| ConvBank {
                    width,
                    weights: vec![0.0; FILTERS_PER_WIDTH * width * embed_dim],
                    bias: vec![0.0; FILTERS_PER_WIDTH],
                })
                .collect(),
            output_weights: vec![0.0; FEATURES * CLASSES],
            output_bias: vec![0.0; CLASSES],
        }
    }

    /// Tensors in serialization order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.embedding];
        for bank in &self.banks {
            out.push(&bank.weights);
            out.push(&bank.bias);
        }
        out.push(&self.output_weights);
        out.push(&self.output_bias);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.embedding];
        for bank in &mut self.banks {
            out.push(&mut bank.weights);
            out.push(&mut bank.bias);
        }
        out.push(&mut self.output_weights);
        out.push(&mut self.output_bias);
        out
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }
}

/// Per-example activations kept for the backward pass.
pub(crate) struct ForwardCache {
    embedded: Vec<f64>,
    /// Max pre-activation per filter and the window start achieving it.
    pooled: [f64; FEATURES],
    argmax: [usize; FEATURES],
    /// Post-ReLU pooled features, before dropout.
    pub(crate) features: [f64; FEATURES],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    vocab: Vocabulary,
    embed_dim: usize,
    seq_len: usize,
    params: Parameters,
}

impl CnnModel {
    /// Randomly initialized model. Embedding rows are uniform in ±0.25,
    /// convolution and output weights use Glorot-uniform bounds, biases
    /// start at zero.
    pub fn new<R: Rng>(
        vocab: Vocabulary,
        embed_dim: usize,
        seq_len: usize,
        rng: &mut R,
    ) -> Result<Self, ClassifierError> {
        let mut model = CnnModel::zeroed(vocab, embed_dim, seq_len)?;
        let d = embed_dim;
        let emb = Uniform::new_inclusive(-0.25, 0.25).expect("valid bounds");
        for (i, v) in model.params.embedding.iter_mut().enumerate() {
            *v = if i / d == PAD_ID as usize { 0.0 } else { emb.sample(rng) };
        }
        for bank in &mut model.params.banks {
            let bound = (6.0 / ((bank.width * d + FILTERS_PER_WIDTH) as f64)).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("valid bounds");
            for w in &mut bank.weights {
                *w = dist.sample(rng);
            }
        }
        let bound = (6.0 / ((FEATURES + CLASSES) as f64)).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("valid bounds");
        for w in &mut model.params.output_weights {
            *w = dist.sample(rng);
        }
        Ok(model)
    }

    pub fn zeroed(vocab: Vocabulary, embed_dim: usize, seq_len: usize) -> Result<Self, ClassifierError> {
        if embed_dim == 0 {
            return Err(ClassifierError::InvalidConfig("embedding dimension must be positive".into()));
        }
        if seq_len < MAX_WIDTH {
            return Err(ClassifierError::InvalidConfig(format!(
                "sequence length {seq_len} is shorter than the widest filter ({MAX_WIDTH})"
            )));
        }
        let params = Parameters::zeros(vocab.len(), embed_dim);
        Ok(CnnModel {
            vocab,
            embed_dim,
            seq_len,
            params,
        })
    }

    pub(crate) fn from_parts(
        vocab: Vocabulary,
        embed_dim: usize,
        seq_len: usize,
        params: Parameters,
    ) -> Self {
        CnnModel {
            vocab,
            embed_dim,
            seq_len,
            params,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Parameters {
        &mut self.params
    }

    /// Tokenizes, maps to ids and pads/truncates to the model's length.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        self.vocab.encode(&tokenize(text), self.seq_len)
    }

    pub fn predict_text(&self, text: &str) -> EmotionPrediction {
        self.predict_ids(&self.encode(text))
    }

    pub fn predict_ids(&self, ids: &[u32]) -> EmotionPrediction {
        EmotionPrediction::from_logits(self.logits(ids))
    }

    pub fn logits(&self, ids: &[u32]) -> [f64; CLASSES] {
        let ids = self.fit_length(ids);
        let cache = self.forward(&ids);
        self.output_layer(&cache.features)
    }

    /// The 125 pooled, rectified features for a sequence.
    pub fn pooled_features(&self, ids: &[u32]) -> [f64; FEATURES] {
        self.forward(&self.fit_length(ids)).features
    }

    fn fit_length<'a>(&self, ids: &'a [u32]) -> std::borrow::Cow<'a, [u32]> {
        if ids.len() == self.seq_len {
            std::borrow::Cow::Borrowed(ids)
        } else {
            let mut v: Vec<u32> = ids.iter().copied().take(self.seq_len).collect();
            v.resize(self.seq_len, PAD_ID);
            std::borrow::Cow::Owned(v)
        }
    }

    /// Mean cross-entropy over the batch and its exact gradient, with
    /// dropout disabled. Sequences are padded/truncated to the model length.
    pub fn loss_and_gradients(&self, batch: &[(Vec<u32>, Emotion)]) -> (f64, Parameters) {
        let mut grads = Parameters::zeros(self.vocab.len(), self.embed_dim);
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut loss = 0.0;
        for (ids, label) in batch {
            let ids = self.fit_length(ids);
            loss += self.accumulate_example(&ids, *label, None, scale, &mut grads);
        }
        (loss * scale, grads)
    }

    /// Forward and backward pass for one example; adds `scale`-weighted
    /// gradients into `grads` and returns the unscaled loss. `dropout`
    /// holds per-feature multipliers (0 or 1/keep).
    pub(crate) fn accumulate_example(
        &self,
        ids: &[u32],
        label: Emotion,
        dropout: Option<&[f64; FEATURES]>,
        scale: f64,
        grads: &mut Parameters,
    ) -> f64 {
        let cache = self.forward(ids);
        let mut dropped = cache.features;
        if let Some(mask) = dropout {
            for (h, m) in dropped.iter_mut().zip(mask) {
                *h *= m;
            }
        }
        let logits = self.output_layer(&dropped);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        let loss = log_z - logits[label.code()];

        let mut dlogits = [0.0; CLASSES];
        for (c, dl) in dlogits.iter_mut().enumerate() {
            let p = (logits[c] - log_z).exp();
            let target = if c == label.code() { 1.0 } else { 0.0 };
            *dl = (p - target) * scale;
        }
        self.backward(ids, &cache, &dropped, dropout, &dlogits, grads);
        loss
    }

    pub(crate) fn output_layer(&self, features: &[f64; FEATURES]) -> [f64; CLASSES] {
        let mut logits = [0.0; CLASSES];
        logits.copy_from_slice(&self.params.output_bias);
        for (f, &h) in features.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            let row = &self.params.output_weights[f * CLASSES..(f + 1) * CLASSES];
            for (l, w) in logits.iter_mut().zip(row) {
                *l += h * w;
            }
        }
        logits
    }

    pub(crate) fn forward(&self, ids: &[u32]) -> ForwardCache {
        debug_assert_eq!(ids.len(), self.seq_len);
        let d = self.embed_dim;
        let mut embedded = vec![0.0; ids.len() * d];
        for (pos, &id) in ids.iter().enumerate() {
            let id = (id as usize).min(self.vocab.len() - 1);
            embedded[pos * d..(pos + 1) * d].copy_from_slice(&self.params.embedding[id * d..(id + 1) * d]);
        }

        let mut pooled = [0.0; FEATURES];
        let mut argmax = [0usize; FEATURES];
        for (b, bank) in self.params.banks.iter().enumerate() {
            let span = bank.width * d;
            let positions = ids.len() - bank.width + 1;
            for (f, filter) in bank.weights.chunks_exact(span).enumerate() {
                let mut best = f64::NEG_INFINITY;
                let mut best_pos = 0;
                for p in 0..positions {
                    let window = &embedded[p * d..p * d + span];
                    let s = dot(filter, window);
                    if s > best {
                        best = s;
                        best_pos = p;
                    }
                }
                let k = b * FILTERS_PER_WIDTH + f;
                pooled[k] = best + bank.bias[f];
                argmax[k] = best_pos;
            }
        }
        let features = pooled.map(|v| v.max(0.0));
        ForwardCache {
            embedded,
            pooled,
            argmax,
            features,
        }
    }

    fn backward(
        &self,
        ids: &[u32],
        cache: &ForwardCache,
        dropped: &[f64; FEATURES],
        dropout: Option<&[f64; FEATURES]>,
        dlogits: &[f64; CLASSES],
        grads: &mut Parameters,
    ) {
        let d = self.embed_dim;
        for (g, dl) in grads.output_bias.iter_mut().zip(dlogits) {
            *g += dl;
        }
        let mut dfeatures = [0.0; FEATURES];
        for f in 0..FEATURES {
            let row = f * CLASSES..(f + 1) * CLASSES;
            let w = &self.params.output_weights[row.clone()];
            let gw = &mut grads.output_weights[row];
            let h = dropped[f];
            let mut acc = 0.0;
            for c in 0..CLASSES {
                gw[c] += h * dlogits[c];
                acc += w[c] * dlogits[c];
            }
            dfeatures[f] = match dropout {
                Some(mask) => acc * mask[f],
                None => acc,
            };
        }

        for (b, bank) in self.params.banks.iter().enumerate() {
            let span = bank.width * d;
            let gbank = &mut grads.banks[b];
            for f in 0..FILTERS_PER_WIDTH {
                let k = b * FILTERS_PER_WIDTH + f;
                if cache.pooled[k] <= 0.0 || dfeatures[k] == 0.0 {
                    continue;
                }
                let g = dfeatures[k];
                let start = cache.argmax[k];
                gbank.bias[f] += g;
                let window = &cache.embedded[start * d..start * d + span];
                let gfilter = &mut gbank.weights[f * span..(f + 1) * span];
                for (gw, x) in gfilter.iter_mut().zip(window) {
                    *gw += g * x;
                }
                let filter = &bank.weights[f * span..(f + 1) * span];
                for offset in 0..bank.width {
                    let id = ids[start + offset] as usize;
                    if id == PAD_ID as usize || id >= self.vocab.len() {
                        continue;
                    }
                    let gemb = &mut grads.embedding[id * d..(id + 1) * d];
                    let wpart = &filter[offset * d..(offset + 1) * d];
                    for (ge, w) in gemb.iter_mut().zip(wpart) {
                        *ge += g * w;
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

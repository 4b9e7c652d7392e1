use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use emosuggest_bench::synthetic_examples;
use emosuggest_core::classifier::{train, Vocabulary};
use emosuggest_core::{tokenize, CnnModel, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model() -> (CnnModel, Vec<emosuggest_core::LabeledExample>) {
    let examples = synthetic_examples(256, 4);
    let tokens: Vec<Vec<String>> = examples.iter().map(|e| tokenize(&e.text)).collect();
    let vocab = Vocabulary::build(tokens.iter().map(|t| t.as_slice()));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let config = TrainConfig::default();
    (CnnModel::new(vocab, config.embed_dim, config.seq_len, &mut rng).unwrap(), examples)
}

fn forward(c: &mut Criterion) {
    let (model, examples) = model();
    c.bench_function("cnn_predict_default_dims", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % examples.len();
            black_box(model.predict_text(&examples[i].text))
        })
    });
}

fn gradients(c: &mut Criterion) {
    let (model, examples) = model();
    let batch: Vec<_> = examples[..32].iter().map(|e| (model.encode(&e.text), e.label)).collect();
    c.bench_function("cnn_gradients_batch32", |b| b.iter(|| black_box(model.loss_and_gradients(&batch))));
}

fn epoch(c: &mut Criterion) {
    let examples = synthetic_examples(128, 6);
    let config = TrainConfig { epochs: 1, embed_dim: 32, seq_len: 20, ..TrainConfig::default() };
    let mut group = c.benchmark_group("cnn_train");
    group.sample_size(10);
    group.bench_function("one_epoch_128_examples", |b| b.iter(|| train(&examples, &[], &config).unwrap()));
    group.finish();
}

criterion_group!(benches, forward, gradients, epoch);
criterion_main!(benches);

//! Synthetic fixtures shared by the benchmarks.

use emosuggest_core::corpus::ingest_reader;
use emosuggest_core::{Emotion, LabeledExample, TurnStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sentence(rng: &mut ChaCha8Rng, vocab: usize, max_len: usize) -> String {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| {
            let u: f64 = rng.random();
            format!("w{}", (u * u * vocab as f64) as usize)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// A corpus of `turns` two-message dialogs with random labels.
pub fn synthetic_store(turns: usize, seed: u64) -> TurnStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tsv = String::new();
    for i in 0..turns {
        let received = sentence(&mut rng, 5000, 15);
        let reply = sentence(&mut rng, 5000, 15);
        let emotion = Emotion::ALL[rng.random_range(0..7)];
        tsv.push_str(&format!("d{i}\tA\t1\t{received}\nd{i}\tB\t2\t{reply}\t{emotion}\n"));
    }
    ingest_reader(tsv.as_bytes(), None).expect("well formed").0
}

pub fn synthetic_examples(n: usize, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let text = sentence(&mut rng, 2000, 30);
            LabeledExample::new(text, Emotion::ALL[rng.random_range(0..7)])
        })
        .collect()
}

pub fn synthetic_queries(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sentence(&mut rng, 5000, 8)).collect()
}

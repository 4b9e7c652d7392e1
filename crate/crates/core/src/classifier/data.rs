//! Labeled corpora: the `label<TAB>text` file format and stratified splits.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::emotion::Emotion;
use crate::error::ClassifierError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub text: String,
    pub label: Emotion,
}

impl LabeledExample {
    pub fn new(text: impl Into<String>, label: Emotion) -> Self {
        LabeledExample {
            text: text.into(),
            label,
        }
    }
}

/// Replaces tabs and line breaks so the text fits on one corpus line.
pub fn sanitize_field(text: &str) -> String {
    text.chars()
        .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
        .collect()
}

/// Parses a `label<TAB>text` corpus. Blank lines are skipped; anything else
/// that does not parse is an error.
pub fn read_labeled<R: BufRead>(reader: R) -> Result<Vec<LabeledExample>, ClassifierError> {
    let mut examples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: String| ClassifierError::Parse { line: i + 1, reason };
        let (label, text) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected label<TAB>text".into()))?;
        let label = label.parse::<Emotion>().map_err(|e| parse_err(e.to_string()))?;
        examples.push(LabeledExample::new(text, label));
    }
    Ok(examples)
}

pub fn write_labeled<W: Write>(mut writer: W, examples: &[LabeledExample]) -> std::io::Result<()> {
    for ex in examples {
        writeln!(writer, "{}\t{}", ex.label, sanitize_field(&ex.text))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub valid: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

pub const DEFAULT_SPLIT: [f64; 3] = [0.7, 0.1, 0.2];

/// Stratified, seeded train/validation/test partition.
///
/// Overall validation and test sizes are `round(n * ratio)` with the
/// remainder going to training. Those totals are then apportioned across
/// labels by largest remainder, so every label keeps its share up to one
/// example.
pub fn split_dataset(
    examples: &[LabeledExample],
    ratios: [f64; 3],
    seed: u64,
) -> Result<DatasetSplit, ClassifierError> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(ClassifierError::InvalidRatios(ratios));
    }
    let n = examples.len();
    if n < Emotion::COUNT {
        return Err(ClassifierError::TooFewExamples {
            needed: Emotion::COUNT,
            got: n,
        });
    }

    let valid_total = (n as f64 * ratios[1]).round() as usize;
    let test_total = ((n as f64 * ratios[2]).round() as usize).min(n - valid_total);

    let mut by_class: Vec<Vec<&LabeledExample>> = vec![Vec::new(); Emotion::COUNT];
    for ex in examples {
        by_class[ex.label.code()].push(ex);
    }
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let valid_counts = apportion(&counts, n, valid_total, &counts);
    let caps: Vec<usize> = counts.iter().zip(&valid_counts).map(|(c, v)| c - v).collect();
    let test_counts = apportion(&counts, n, test_total, &caps);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = DatasetSplit::default();
    for (class, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let (v, t) = (valid_counts[class], test_counts[class]);
        split.valid.extend(members[..v].iter().map(|e| (*e).clone()));
        split.test.extend(members[v..v + t].iter().map(|e| (*e).clone()));
        split.train.extend(members[v + t..].iter().map(|e| (*e).clone()));
    }
    split.train.shuffle(&mut rng);
    split.valid.shuffle(&mut rng);
    split.test.shuffle(&mut rng);
    Ok(split)
}

/// Largest-remainder apportionment of `total` seats proportional to
/// `weights` (summing to `weight_sum`), never exceeding `caps`.
fn apportion(weights: &[usize], weight_sum: usize, total: usize, caps: &[usize]) -> Vec<usize> {
    let mut seats = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let exact = w * total;
        let floor = (exact / weight_sum).min(caps[i]);
        seats.push(floor);
        // Remainder as an exact fraction numerator over weight_sum.
        remainders.push((exact - floor * weight_sum, i));
    }
    let mut left = total - seats.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(rem, i) in &remainders {
        if left == 0 {
            break;
        }
        if rem > 0 && seats[i] < caps[i] {
            seats[i] += 1;
            left -= 1;
        }
    }
    for i in 0..seats.len() {
        while left > 0 && seats[i] < caps[i] {
            seats[i] += 1;
            left -= 1;
        }
    }
    seats
}

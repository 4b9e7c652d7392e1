use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::data::LabeledExample;
use super::model::CnnModel;
use super::EmotionAnnotator;
use crate::emotion::Emotion;
use crate::error::ClassifierError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    pub correct: usize,
    pub total: usize,
}

impl ClassTally {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Top-1 accuracy per gold class. Classes absent from the test set have no
/// entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub per_class: BTreeMap<Emotion, ClassTally>,
}

impl AccuracyReport {
    fn record(&mut self, gold: Emotion, predicted: Emotion) {
        let tally = self.per_class.entry(gold).or_default();
        tally.total += 1;
        if gold == predicted {
            tally.correct += 1;
        }
    }

    pub fn accuracy(&self, emotion: Emotion) -> Option<f64> {
        self.per_class.get(&emotion).map(ClassTally::accuracy)
    }

    pub fn total(&self) -> usize {
        self.per_class.values().map(|t| t.total).sum()
    }

    pub fn correct(&self) -> usize {
        self.per_class.values().map(|t| t.correct).sum()
    }

    /// Overall top-1 accuracy; 0 for an empty report.
    pub fn overall(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.correct() as f64 / total as f64
        }
    }
}

pub fn evaluate<A: EmotionAnnotator + ?Sized>(
    predictor: &A,
    test: &[LabeledExample],
) -> Result<AccuracyReport, ClassifierError> {
    if test.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    let mut report = AccuracyReport::default();
    for ex in test {
        report.record(ex.label, predictor.predict(&ex.text).top());
    }
    Ok(report)
}

pub(crate) fn evaluate_encoded(model: &CnnModel, set: &[(Vec<u32>, Emotion)]) -> AccuracyReport {
    let mut report = AccuracyReport::default();
    for (ids, label) in set {
        report.record(*label, model.predict_ids(ids).top());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::EmotionPrediction;

    struct Constant(Emotion);
    impl EmotionAnnotator for Constant {
        fn predict(&self, _text: &str) -> EmotionPrediction {
            EmotionPrediction::one_hot(self.0)
        }
    }

    /// Looks the answer up from the text itself.
    struct Oracle;
    impl EmotionAnnotator for Oracle {
        fn predict(&self, text: &str) -> EmotionPrediction {
            EmotionPrediction::one_hot(text.split(' ').next().unwrap().parse().unwrap())
        }
    }

    fn balanced() -> Vec<LabeledExample> {
        Emotion::ALL
            .iter()
            .flat_map(|&e| (0..3).map(move |i| LabeledExample::new(format!("{e} {i}"), e)))
            .collect()
    }

    #[test]
    fn perfect_predictor_scores_one_everywhere() {
        let report = evaluate(&Oracle, &balanced()).unwrap();
        for e in Emotion::ALL {
            assert_eq!(report.accuracy(e), Some(1.0));
        }
        assert_eq!(report.overall(), 1.0);
    }

    #[test]
    fn constant_predictor() {
        let report = evaluate(&Constant(Emotion::Joy), &balanced()).unwrap();
        for e in Emotion::ALL {
            let expected = if e == Emotion::Joy { 1.0 } else { 0.0 };
            assert_eq!(report.accuracy(e), Some(expected));
        }
    }

    #[test]
    fn absent_classes_are_omitted_and_weighted_mean_is_overall() {
        let mut data = balanced();
        data.retain(|e| e.label != Emotion::Fear);
        data.push(LabeledExample::new("joy extra", Emotion::Anger));
        let report = evaluate(&Oracle, &data).unwrap();
        assert_eq!(report.accuracy(Emotion::Fear), None);
        assert_eq!(report.accuracy(Emotion::Anger), Some(0.75));
        let weighted: f64 = report
            .per_class
            .values()
            .map(|t| t.accuracy() * t.total as f64)
            .sum::<f64>()
            / report.total() as f64;
        assert!((weighted - report.overall()).abs() < 1e-12);
        assert!(report.per_class.values().all(|t| (0.0..=1.0).contains(&t.accuracy())));
    }

    #[test]
    fn empty_test_set_is_an_error() {
        assert!(matches!(evaluate(&Oracle, &[]), Err(ClassifierError::EmptyTestSet)));
    }
}

//! The seven-emotion taxonomy, its color bar palette and the probability
//! distribution produced by the classifier.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::EmotionError;

/// Tolerance on the sum of an [`EmotionPrediction`].
pub const PROBABILITY_TOLERANCE: f64 = 1e-6;

/// Closed emotion taxonomy. Discriminants are the stable integer codes and
/// the declaration order is the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum Emotion {
    Anger = 0,
    Joy = 1,
    Sadness = 2,
    Fear = 3,
    Anticipation = 4,
    Tired = 5,
    Neutral = 6,
}

impl Emotion {
    pub const COUNT: usize = 7;

    /// All emotions in canonical order.
    pub const ALL: [Emotion; Emotion::COUNT] = [
        Emotion::Anger,
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Fear,
        Emotion::Anticipation,
        Emotion::Tired,
        Emotion::Neutral,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Emotion> {
        Emotion::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Fear => "fear",
            Emotion::Anticipation => "anticipation",
            Emotion::Tired => "tired",
            Emotion::Neutral => "neutral",
        }
    }

    /// Display label with a leading capital, as used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Emotion::Anger => "Anger",
            Emotion::Joy => "Joy",
            Emotion::Sadness => "Sadness",
            Emotion::Fear => "Fear",
            Emotion::Anticipation => "Anticipation",
            Emotion::Tired => "Tired",
            Emotion::Neutral => "Neutral",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = EmotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lowered = s.trim().to_ascii_lowercase();
        Emotion::ALL
            .iter()
            .copied()
            .find(|e| e.name() == lowered)
            .ok_or_else(|| EmotionError::UnknownEmotion(s.to_string()))
    }
}

/// 24-bit RGB color, serialized as `#RRGGBB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb { r, g, b }
    }

    /// Hue in degrees `[0, 360)`; `None` for achromatic colors.
    pub fn hue(self) -> Option<f64> {
        let r = f64::from(self.r) / 255.0;
        let g = f64::from(self.g) / 255.0;
        let b = f64::from(self.b) / 255.0;
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let delta = max - min;
        if delta == 0.0 {
            return None;
        }
        let h = if max == r {
            60.0 * ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            60.0 * ((b - r) / delta + 2.0)
        } else {
            60.0 * ((r - g) / delta + 4.0)
        };
        Some(h.rem_euclid(360.0))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }
}

impl FromStr for Rgb {
    type Err = EmotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EmotionError::InvalidColor(s.to_string());
        let hex = s.trim().strip_prefix('#').ok_or_else(bad)?;
        if hex.len() != 6 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        Ok(Rgb::new(channel(0)?, channel(2)?, channel(4)?))
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Total, injective map from emotion to color bar color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorMap {
    colors: [Rgb; Emotion::COUNT],
}

impl Default for ColorMap {
    fn default() -> Self {
        ColorMap {
            colors: [
                Rgb::new(0xFF, 0x00, 0x00), // anger: red
                Rgb::new(0xFF, 0xD4, 0x00), // joy: yellow
                Rgb::new(0x1E, 0x50, 0xE6), // sadness: blue
                Rgb::new(0x00, 0xA6, 0x51), // fear: green
                Rgb::new(0xFF, 0x8C, 0x00), // anticipation: orange
                Rgb::new(0x8B, 0x5A, 0x2B), // tired: brown
                Rgb::new(0x9E, 0x9E, 0x9E), // neutral: gray
            ],
        }
    }
}

impl ColorMap {
    /// Builds a map from one color per emotion in canonical order. Colors
    /// must be pairwise distinct.
    pub fn new(colors: [Rgb; Emotion::COUNT]) -> Result<Self, EmotionError> {
        for i in 0..colors.len() {
            for j in (i + 1)..colors.len() {
                if colors[i] == colors[j] {
                    return Err(EmotionError::DuplicateColor {
                        first: Emotion::ALL[i],
                        second: Emotion::ALL[j],
                        color: colors[i].to_string(),
                    });
                }
            }
        }
        Ok(ColorMap { colors })
    }

    /// Returns a copy with one entry replaced, re-validating distinctness.
    pub fn with(&self, emotion: Emotion, color: Rgb) -> Result<Self, EmotionError> {
        let mut colors = self.colors;
        colors[emotion.code()] = color;
        ColorMap::new(colors)
    }

    pub fn color_of(&self, emotion: Emotion) -> Rgb {
        self.colors[emotion.code()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Emotion, Rgb)> + '_ {
        Emotion::ALL.iter().map(move |&e| (e, self.color_of(e)))
    }
}

/// Probability distribution over the seven emotions, indexed by code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmotionPrediction {
    probabilities: [f64; Emotion::COUNT],
}

impl EmotionPrediction {
    /// Validates that every entry is in `[0, 1]` and the total is 1 within
    /// [`PROBABILITY_TOLERANCE`].
    pub fn new(probabilities: [f64; Emotion::COUNT]) -> Result<Self, EmotionError> {
        let prediction = EmotionPrediction { probabilities };
        prediction.validate()?;
        Ok(prediction)
    }

    /// Normalizes non-negative scores into a distribution.
    pub fn from_scores(scores: [f64; Emotion::COUNT]) -> Result<Self, EmotionError> {
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(EmotionError::MalformedDistribution {
                sum: scores.iter().sum(),
            });
        }
        let total: f64 = scores.iter().sum();
        if total <= 0.0 {
            return Err(EmotionError::MalformedDistribution { sum: total });
        }
        EmotionPrediction::new(scores.map(|s| s / total))
    }

    /// Softmax over raw logits.
    pub fn from_logits(logits: [f64; Emotion::COUNT]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps = logits.map(|l| (l - max).exp());
        let total: f64 = exps.iter().sum();
        EmotionPrediction {
            probabilities: exps.map(|e| e / total),
        }
    }

    pub fn uniform() -> Self {
        EmotionPrediction {
            probabilities: [1.0 / Emotion::COUNT as f64; Emotion::COUNT],
        }
    }

    pub fn one_hot(emotion: Emotion) -> Self {
        let mut probabilities = [0.0; Emotion::COUNT];
        probabilities[emotion.code()] = 1.0;
        EmotionPrediction { probabilities }
    }

    pub fn validate(&self) -> Result<(), EmotionError> {
        let sum: f64 = self.probabilities.iter().sum();
        let in_range = self
            .probabilities
            .iter()
            .all(|p| p.is_finite() && (0.0..=1.0).contains(p));
        if !in_range || (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(EmotionError::MalformedDistribution { sum });
        }
        Ok(())
    }

    pub fn probability(&self, emotion: Emotion) -> f64 {
        self.probabilities[emotion.code()]
    }

    pub fn probabilities(&self) -> &[f64; Emotion::COUNT] {
        &self.probabilities
    }

    /// Most probable emotion, ties to the lower code.
    pub fn top(&self) -> Emotion {
        rank_order(&self.probabilities)[0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Emotion, f64)> + '_ {
        Emotion::ALL.iter().map(move |&e| (e, self.probability(e)))
    }
}

impl Serialize for EmotionPrediction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(Emotion::COUNT))?;
        for (emotion, p) in self.iter() {
            map.serialize_entry(emotion.name(), &p)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for EmotionPrediction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = std::collections::BTreeMap::<Emotion, f64>::deserialize(deserializer)?;
        let mut probabilities = [f64::NAN; Emotion::COUNT];
        for (emotion, p) in map {
            probabilities[emotion.code()] = p;
        }
        EmotionPrediction::new(probabilities).map_err(serde::de::Error::custom)
    }
}

fn rank_order(probabilities: &[f64; Emotion::COUNT]) -> [Emotion; Emotion::COUNT] {
    let mut order = Emotion::ALL;
    // Stable sort keeps canonical order among equal probabilities.
    order.sort_by(|a, b| probabilities[b.code()].total_cmp(&probabilities[a.code()]));
    order
}

/// Orders all seven emotions by descending probability, ties broken by
/// ascending code.
pub fn rank_emotions(prediction: &EmotionPrediction) -> Result<[Emotion; Emotion::COUNT], EmotionError> {
    prediction.validate()?;
    Ok(rank_order(&prediction.probabilities))
}

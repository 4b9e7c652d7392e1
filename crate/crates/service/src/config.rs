//! Service configuration, read from a TOML file.
//!
//! ```toml
//! corpus = "corpus.tsv"
//! model = "model.bin"
//! listen = "127.0.0.1:8080"
//! log_dir = "logs"
//!
//! [bm25]
//! k1 = 1.2
//! b = 0.75
//!
//! [timing]
//! throttle_ms = 400
//! pause_ms = 500
//! dwell_ms = 3000
//! wrap_swipes = false
//!
//! [colors]
//! joy = "#FFD400"
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use emosuggest_core::session::TimingConfig;
use emosuggest_core::{Bm25Params, ColorMap, Emotion, Rgb};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub corpus: PathBuf,
    pub model: PathBuf,
    pub listen: SocketAddr,
    pub log_dir: PathBuf,
    pub bm25: Bm25Params,
    pub timing: TimingConfig,
    pub colors: ColorMap,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    corpus: PathBuf,
    model: PathBuf,
    #[serde(default = "default_listen")]
    listen: SocketAddr,
    #[serde(default = "default_log_dir")]
    log_dir: PathBuf,
    #[serde(default)]
    bm25: Bm25Params,
    #[serde(default)]
    timing: TimingConfig,
    #[serde(default)]
    colors: BTreeMap<Emotion, Rgb>,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_log_dir() -> PathBuf {
    PathBuf::from("logs")
}

impl ServiceConfig {
    /// Parses and validates; relative paths are joined onto `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let mut colors = ColorMap::default();
        for (emotion, rgb) in raw.colors {
            colors = colors.with(emotion, rgb).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let config = ServiceConfig {
            corpus: base.join(raw.corpus),
            model: base.join(raw.model),
            listen: raw.listen,
            log_dir: base.join(raw.log_dir),
            bm25: raw.bm25,
            timing: raw.timing,
            colors,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_timing(&self.timing)?;
        self.bm25.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

pub fn validate_timing(t: &TimingConfig) -> Result<(), ConfigError> {
    if t.throttle_ms == 0 || t.pause_ms == 0 || t.dwell_ms == 0 {
        return Err(ConfigError::Invalid("timings must be positive".into()));
    }
    if t.throttle_ms > t.pause_ms {
        return Err(ConfigError::Invalid(format!(
            "throttle_ms ({}) must not exceed pause_ms ({})",
            t.throttle_ms, t.pause_ms
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ServiceConfig::from_toml_str("corpus = \"c.tsv\"\nmodel = \"m.bin\"\n", Path::new("/srv")).unwrap();
        assert_eq!(c.corpus, PathBuf::from("/srv/c.tsv"));
        assert_eq!(c.log_dir, PathBuf::from("/srv/logs"));
        assert_eq!(c.timing, TimingConfig::default());
        assert_eq!(c.bm25, Bm25Params::default());
        assert_eq!(c.colors, ColorMap::default());
    }

    #[test]
    fn overrides_and_absolute_paths() {
        let text = r##"
corpus = "/data/c.tsv"
model = "m.bin"
listen = "0.0.0.0:9000"
[bm25]
k1 = 2.0
[timing]
dwell_ms = 1000
wrap_swipes = true
[colors]
joy = "#FFFF00"
"##;
        let c = ServiceConfig::from_toml_str(text, Path::new("base")).unwrap();
        assert_eq!(c.corpus, PathBuf::from("/data/c.tsv"));
        assert_eq!(c.bm25, Bm25Params { k1: 2.0, b: 0.75 });
        assert_eq!(c.timing.dwell_ms, 1000);
        assert_eq!(c.timing.throttle_ms, 400);
        assert!(c.timing.wrap_swipes);
        assert_eq!(c.colors.color_of(Emotion::Joy), Rgb::new(255, 255, 0));
        assert_eq!(c.listen.port(), 9000);
    }

    #[test]
    fn rejects_bad_values() {
        let base = Path::new(".");
        let head = "corpus = \"c\"\nmodel = \"m\"\n";
        for bad in [
            "[timing]\nthrottle_ms = 600\n",
            "[timing]\npause_ms = 0\n",
            "[bm25]\nb = 2.0\n",
            "[colors]\njoy = \"#FF0000\"\n",
            "[colors]\njoy = \"yellow\"\n",
            "bogus = 1\n",
        ] {
            let text = format!("{head}{bad}");
            assert!(ServiceConfig::from_toml_str(&text, base).is_err(), "{bad}");
        }
        assert!(ServiceConfig::from_toml_str("model = \"m\"\n", base).is_err());
    }
}

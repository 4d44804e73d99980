//! The TOML configuration document.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::FadingPolicy;
use crate::observer::ObserverThresholds;
use crate::scheduler::{TrainingWindow, DEFAULT_MAX_WINDOW_HOURS, DEFAULT_TARGET_CONVERSATIONS};
use crate::speakers::LlmConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(String),
    #[error("invalid value for {field}: {reason}")]
    Validation { field: String, reason: String },
}

impl ConfigError {
    fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Validation { field: field.into(), reason: reason.into() }
    }

    /// The offending key path for validation errors.
    pub fn field_name(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valence: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptive: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotifierTarget {
    #[default]
    Stdout,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub windows: Vec<TrainingWindow>,
    pub target_conversations: u32,
    pub max_window_hours: f64,
    pub observer: ObserverThresholds,
    pub fading: FadingPolicy,
    pub speaker: LlmConfig,
    pub lexicons: LexiconPaths,
    pub storage_root: PathBuf,
    pub notifier: NotifierTarget,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub persona: Option<String>,
    /// CSV of presence readings replayed instead of a live sensor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub presence_scenario: Option<PathBuf>,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            windows: Vec::new(),
            target_conversations: DEFAULT_TARGET_CONVERSATIONS,
            max_window_hours: DEFAULT_MAX_WINDOW_HOURS,
            observer: ObserverThresholds::default(),
            fading: FadingPolicy::default(),
            speaker: LlmConfig::default(),
            lexicons: LexiconPaths::default(),
            storage_root: PathBuf::from("data"),
            notifier: NotifierTarget::Stdout,
            persona: None,
            presence_scenario: None,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: TrainingConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.windows.is_empty() {
            return Err(ConfigError::field("windows", "at least one window is required"));
        }
        if !(self.max_window_hours.is_finite() && self.max_window_hours > 0.0) {
            return Err(ConfigError::field("max_window_hours", "must be positive"));
        }
        if self.target_conversations == 0 {
            return Err(ConfigError::field("target_conversations", "must be positive"));
        }
        for (i, w) in self.windows.iter().enumerate() {
            w.validate(self.max_window_hours)
                .map_err(|(f, r)| ConfigError::field(format!("windows[{i}].{f}"), r))?;
        }
        let mut sorted: Vec<&TrainingWindow> = self.windows.iter().collect();
        sorted.sort_by_key(|w| w.start);
        for pair in sorted.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(ConfigError::field("windows", "windows overlap"));
            }
        }
        self.observer.validate().map_err(|(f, r)| ConfigError::field(format!("observer.{f}"), r))?;
        self.fading.validate().map_err(|(f, r)| ConfigError::field(format!("fading.{f}"), r))?;
        if !(0.0..=2.0).contains(&self.speaker.temperature) {
            return Err(ConfigError::field("speaker.temperature", "must lie in [0, 2]"));
        }
        if !(self.speaker.timeout_s.is_finite() && self.speaker.timeout_s > 0.0) {
            return Err(ConfigError::field("speaker.timeout_s", "must be positive"));
        }
        Ok(())
    }

    /// Resolves relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.storage_root);
        if let Some(p) = self.lexicons.valence.as_mut() {
            fix(p);
        }
        if let Some(p) = self.lexicons.descriptive.as_mut() {
            fix(p);
        }
        if let Some(p) = self.presence_scenario.as_mut() {
            fix(p);
        }
    }
}

/// Reads and validates a configuration file. Relative paths inside it are
/// taken relative to the file's directory.
pub fn load_config(path: &Path) -> Result<TrainingConfig, ConfigError> {
    let text =
        fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    let mut config = TrainingConfig::parse(&text)?;
    if let Some(dir) = path.parent() {
        config.resolve_paths(dir);
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
target_conversations = 4
seed = 9

[[windows]]
start = "09:00"
end = "11:30"

[observer]
brevity_max_words = 25
"#;

    #[test]
    fn parses_sample() {
        let c = TrainingConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.target_conversations, 4);
        assert_eq!(c.observer.brevity_max_words, 25);
        assert_eq!(c.observer.context_depth, 3);
        assert_eq!(c.windows.len(), 1);
    }

    #[test]
    fn round_trip_is_idempotent() {
        let c = TrainingConfig::parse(SAMPLE).unwrap();
        let once = c.to_toml();
        let again = TrainingConfig::parse(&once).unwrap();
        assert_eq!(c, again);
        assert_eq!(once, again.to_toml());
    }

    #[test]
    fn names_failing_field() {
        let bad = SAMPLE.replace("11:30", "08:00");
        let err = TrainingConfig::parse(&bad).unwrap_err();
        assert_eq!(err.field_name(), Some("windows[0].end"));

        let long = SAMPLE.replace("11:30", "12:30");
        let err = TrainingConfig::parse(&long).unwrap_err();
        assert_eq!(err.field_name(), Some("windows[0].end"));

        let coh = format!("{SAMPLE}coherence_lo = 0.99\n");
        let err = TrainingConfig::parse(&coh).unwrap_err();
        assert_eq!(err.field_name(), Some("observer.coherence_lo"));
    }

    #[test]
    fn requires_a_window() {
        let err = TrainingConfig::parse("seed = 1\n").unwrap_err();
        assert_eq!(err.field_name(), Some("windows"));
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = TrainingConfig::parse(&format!("bogus = 1\n{SAMPLE}")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
    }

    #[test]
    fn resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, SAMPLE).unwrap();
        let c = load_config(&path).unwrap();
        assert_eq!(c.storage_root, dir.path().join("data"));
    }
}

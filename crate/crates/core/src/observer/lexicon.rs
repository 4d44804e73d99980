//! Word lists backing the tone and specificity scorers.
//!
//! Both formats are plain text. Blank lines and lines starting with `#` are
//! ignored. The valence file holds `word<TAB>valence` pairs, the descriptive
//! file one word per line.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::ObserverError;

const BUNDLED_VALENCE: &str = include_str!("../../assets/valence.tsv");
const BUNDLED_DESCRIPTIVE: &str = include_str!("../../assets/descriptive.txt");

/// Word to valence map, values in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ValenceLexicon {
    entries: HashMap<String, f64>,
}

impl ValenceLexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_VALENCE, Path::new("<bundled>")).expect("bundled valence lexicon is well-formed")
    }

    pub fn from_path(path: &Path) -> Result<Self, ObserverError> {
        let text = read_lexicon(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self, ObserverError> {
        let mut entries = HashMap::new();
        for (lineno, line) in content_lines(text) {
            let bad = |reason: &str| ObserverError::LexiconFormat {
                path: origin.to_path_buf(),
                line: lineno,
                reason: reason.to_owned(),
            };
            let (word, value) = line.split_once('\t').ok_or_else(|| bad("expected word<TAB>valence"))?;
            let value: f64 = value.trim().parse().map_err(|_| bad("valence is not a number"))?;
            if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
                return Err(bad("valence outside [-1, 1]"));
            }
            entries.insert(word.trim().to_lowercase(), value);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Set of detail-heavy descriptive words.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveLexicon {
    words: HashSet<String>,
}

impl DescriptiveLexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_DESCRIPTIVE)
    }

    pub fn from_path(path: &Path) -> Result<Self, ObserverError> {
        Ok(Self::parse(&read_lexicon(path)?))
    }

    pub fn parse(text: &str) -> Self {
        let words = content_lines(text).map(|(_, l)| l.trim().to_lowercase()).collect();
        Self { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn read_lexicon(path: &Path) -> Result<String, ObserverError> {
    fs::read_to_string(path).map_err(|_| ObserverError::LexiconMissing(PathBuf::from(path)))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    })
}

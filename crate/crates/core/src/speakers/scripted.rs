//! Fixture-backed deterministic speakers.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use super::{SpeakerError, SpeakerModel, SpeakerRequest};

pub const GREET_SCRIPT: &str = "greet_script";

const BUNDLED: [(&str, &str); 2] = [
    (GREET_SCRIPT, include_str!("../../assets/scripts/greet_script.txt")),
    ("closing_script", include_str!("../../assets/scripts/closing_script.txt")),
];

/// Named scripts, one utterance per line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptLibrary {
    scripts: BTreeMap<String, Vec<String>>,
}

impl ScriptLibrary {
    pub fn bundled() -> Self {
        let mut lib = Self::default();
        for (id, text) in BUNDLED {
            lib.insert(id, parse_lines(text));
        }
        lib
    }

    /// Loads every `*.txt` file in `dir`; the file stem becomes the script id.
    pub fn load_dir(dir: &Path) -> io::Result<Self> {
        let mut lib = Self::default();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                lib.insert(stem, parse_lines(&fs::read_to_string(&path)?));
            }
        }
        Ok(lib)
    }

    pub fn insert(&mut self, id: &str, lines: Vec<String>) {
        self.scripts.insert(id.to_owned(), lines);
    }

    pub fn lines(&self, id: &str) -> Option<&[String]> {
        self.scripts.get(id).map(Vec::as_slice)
    }

    /// Pure lookup of line `turn_index` of script `script_id`.
    pub fn scripted_respond(&self, script_id: &str, turn_index: usize) -> Result<&str, SpeakerError> {
        let lines =
            self.scripts.get(script_id).ok_or_else(|| SpeakerError::UnknownScript(script_id.to_owned()))?;
        lines
            .get(turn_index)
            .map(String::as_str)
            .ok_or_else(|| SpeakerError::ScriptExhausted { script: script_id.to_owned(), index: turn_index })
    }
}

fn parse_lines(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect()
}

/// Returns its candidates in order, one per call, and keeps every request
/// it saw. `Err` entries simulate a failing model for that call.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSpeaker {
    replies: Vec<Result<String, SpeakerError>>,
    next: usize,
    cycle: bool,
    pub requests: Vec<SpeakerRequest>,
}

impl ScriptedSpeaker {
    pub fn new<I, S>(candidates: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_results(candidates.into_iter().map(|s| Ok(s.into())))
    }

    pub fn from_results<I>(replies: I) -> Self
    where
        I: IntoIterator<Item = Result<String, SpeakerError>>,
    {
        Self { replies: replies.into_iter().collect(), ..Self::default() }
    }

    /// Restart from the first candidate after the last one.
    pub fn cycling(mut self) -> Self {
        self.cycle = true;
        self
    }

    pub fn calls(&self) -> usize {
        self.requests.len()
    }
}

impl SpeakerModel for ScriptedSpeaker {
    fn respond(&mut self, request: &SpeakerRequest) -> Result<String, SpeakerError> {
        self.requests.push(request.clone());
        if self.cycle && !self.replies.is_empty() {
            self.next %= self.replies.len();
        }
        let idx = self.next;
        self.next += 1;
        self.replies.get(idx).cloned().unwrap_or_else(|| {
            Err(SpeakerError::ScriptExhausted { script: "scripted-speaker".into(), index: idx })
        })
    }
}

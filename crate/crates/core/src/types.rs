//! Vocabulary shared by every subsystem.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Who produced an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Robot,
    User,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speaker::Robot => f.write_str("robot"),
            Speaker::User => f.write_str("user"),
        }
    }
}

/// The four quantifiable small-talk criteria the observer scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Brevity,
    Tone,
    Specificity,
    Coherence,
}

impl Criterion {
    /// Fixed evaluation order. Verdicts list their scores in this order.
    pub const ALL: [Criterion; 4] =
        [Criterion::Brevity, Criterion::Tone, Criterion::Specificity, Criterion::Coherence];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Brevity => "brevity",
            Criterion::Tone => "tone",
            Criterion::Specificity => "specificity",
            Criterion::Coherence => "coherence",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Criterion::Brevity => 0,
            Criterion::Tone => 1,
            Criterion::Specificity => 2,
            Criterion::Coherence => 3,
        }
    }

    pub fn parse(s: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-criterion violation tally.
///
/// Backed by a fixed array so iteration order (and serialized form) is stable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationCounts {
    #[serde(default)]
    pub brevity: u32,
    #[serde(default)]
    pub tone: u32,
    #[serde(default)]
    pub specificity: u32,
    #[serde(default)]
    pub coherence: u32,
}

impl ViolationCounts {
    pub fn get(&self, c: Criterion) -> u32 {
        match c {
            Criterion::Brevity => self.brevity,
            Criterion::Tone => self.tone,
            Criterion::Specificity => self.specificity,
            Criterion::Coherence => self.coherence,
        }
    }

    pub fn get_mut(&mut self, c: Criterion) -> &mut u32 {
        match c {
            Criterion::Brevity => &mut self.brevity,
            Criterion::Tone => &mut self.tone,
            Criterion::Specificity => &mut self.specificity,
            Criterion::Coherence => &mut self.coherence,
        }
    }

    pub fn increment(&mut self, c: Criterion) {
        *self.get_mut(c) += 1;
    }

    pub fn total(&self) -> u32 {
        Criterion::ALL.iter().map(|c| self.get(*c)).sum()
    }

    pub fn merge(&mut self, other: &ViolationCounts) {
        for c in Criterion::ALL {
            *self.get_mut(c) += other.get(c);
        }
    }

    pub fn from_pairs(pairs: &[(Criterion, u32)]) -> Self {
        let mut v = ViolationCounts::default();
        for (c, n) in pairs {
            *v.get_mut(*c) += n;
        }
        v
    }
}

//! The grounded observer: scores candidate utterances against the four
//! small-talk criteria and drives the regeneration loop that makes the
//! speaking model correct itself.

mod embedding;
mod lexicon;
mod mediate;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{lexical_tokens, strip_token, word_count};
use crate::types::{Criterion, Speaker};

pub use embedding::{cosine, EmbeddingProvider, HashEmbedder, DEFAULT_DIMENSION, DEFAULT_SEED};
pub use lexicon::{DescriptiveLexicon, ValenceLexicon};
pub use mediate::{mediate, Mediation, MAX_REGENERATIONS};

#[derive(Debug, Error)]
pub enum ObserverError {
    #[error("lexicon file not found: {0}")]
    LexiconMissing(PathBuf),
    #[error("{path}:{line}: {reason}")]
    LexiconFormat { path: PathBuf, line: usize, reason: String },
    #[error("speaker unavailable: {0}")]
    SpeakerUnavailable(String),
}

/// One criterion's score for one utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionScore {
    pub criterion: Criterion,
    pub value: f64,
    pub passed: bool,
    pub detail: String,
}

/// The guardrail result for one candidate utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverVerdict {
    /// Exactly four scores, in [`Criterion::ALL`] order.
    pub scores: Vec<CriterionScore>,
    pub overall_pass: bool,
    /// Corrective instructions for the speaking model; present iff the
    /// candidate failed at least one criterion.
    pub directive: Option<String>,
}

impl ObserverVerdict {
    pub fn score(&self, criterion: Criterion) -> &CriterionScore {
        &self.scores[criterion.index()]
    }

    pub fn passed_count(&self) -> usize {
        self.scores.iter().filter(|s| s.passed).count()
    }

    pub fn failed(&self) -> impl Iterator<Item = Criterion> + '_ {
        self.scores.iter().filter(|s| !s.passed).map(|s| s.criterion)
    }
}

/// Bounds applied by the four scorers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObserverThresholds {
    pub brevity_max_words: usize,
    pub tone_min: f64,
    pub named_entity_max: usize,
    pub descriptive_density_max: f64,
    pub coherence_lo: f64,
    pub coherence_hi: f64,
    pub context_depth: usize,
}

impl Default for ObserverThresholds {
    fn default() -> Self {
        Self {
            brevity_max_words: 30,
            tone_min: -0.2,
            named_entity_max: 2,
            descriptive_density_max: 0.25,
            coherence_lo: 0.2,
            coherence_hi: 0.95,
            context_depth: 3,
        }
    }
}

impl ObserverThresholds {
    /// Checks the bounds. On failure returns the offending field name and why.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.brevity_max_words < 1 {
            return Err(("brevity_max_words", "must be at least 1".into()));
        }
        if !(-1.0..=1.0).contains(&self.tone_min) {
            return Err(("tone_min", "must lie in [-1, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.descriptive_density_max) {
            return Err(("descriptive_density_max", "must lie in [0, 1]".into()));
        }
        if !self.coherence_lo.is_finite() || !self.coherence_hi.is_finite() {
            return Err(("coherence_lo", "coherence bounds must be finite".into()));
        }
        if self.coherence_lo >= self.coherence_hi {
            return Err(("coherence_lo", "must be below coherence_hi".into()));
        }
        if self.context_depth == 0 {
            return Err(("context_depth", "must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

/// The conversation so far, oldest turn first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueContext {
    #[serde(default)]
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_hint: Option<String>,
}

impl DialogueContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, speaker: Speaker, text: impl Into<String>) {
        self.turns.push(Turn { speaker, text: text.into() });
    }

    pub fn with_turn(mut self, speaker: Speaker, text: impl Into<String>) -> Self {
        self.push(speaker, text);
        self
    }

    pub fn last_turns(&self, depth: usize) -> &[Turn] {
        let start = self.turns.len().saturating_sub(depth);
        &self.turns[start..]
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

/// Entities and descriptive-word density found in one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecificityBreakdown {
    pub entities: Vec<String>,
    pub descriptive_hits: usize,
    pub words: usize,
    pub density: f64,
}

/// Anything that can judge and mediate robot utterances. The session engine
/// only talks to this trait, so tests can wrap the real observer.
pub trait Guardrail: Send + Sync {
    fn evaluate(&self, text: &str, context: &DialogueContext) -> ObserverVerdict;

    fn mediate(
        &self,
        context: &DialogueContext,
        speaker: &mut dyn crate::speakers::SpeakerModel,
        persona: &str,
    ) -> Result<Mediation, ObserverError>;
}

/// Scores utterances with immutable lexicons and an embedding provider.
#[derive(Clone)]
pub struct Observer {
    thresholds: ObserverThresholds,
    valence: Arc<ValenceLexicon>,
    descriptive: Arc<DescriptiveLexicon>,
    embedder: Arc<dyn EmbeddingProvider>,
}

impl std::fmt::Debug for Observer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observer")
            .field("thresholds", &self.thresholds)
            .field("valence_entries", &self.valence.len())
            .field("descriptive_entries", &self.descriptive.len())
            .finish()
    }
}

impl Default for Observer {
    fn default() -> Self {
        Self::new(ObserverThresholds::default())
    }
}

const FIRST_PERSON: [&str; 5] = ["I", "I'm", "I've", "I'd", "I'll"];

impl Observer {
    /// Observer over the bundled lexicons and the default hash embedder.
    pub fn new(thresholds: ObserverThresholds) -> Self {
        Self {
            thresholds,
            valence: Arc::new(ValenceLexicon::bundled()),
            descriptive: Arc::new(DescriptiveLexicon::bundled()),
            embedder: Arc::new(HashEmbedder::default()),
        }
    }

    /// Replaces either bundled lexicon with a file on disk.
    pub fn with_lexicon_files(
        thresholds: ObserverThresholds,
        valence: Option<&Path>,
        descriptive: Option<&Path>,
    ) -> Result<Self, ObserverError> {
        let mut obs = Self::new(thresholds);
        if let Some(p) = valence {
            obs.valence = Arc::new(ValenceLexicon::from_path(p)?);
        }
        if let Some(p) = descriptive {
            obs.descriptive = Arc::new(DescriptiveLexicon::from_path(p)?);
        }
        Ok(obs)
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn EmbeddingProvider>) -> Self {
        self.embedder = embedder;
        self
    }

    pub fn thresholds(&self) -> &ObserverThresholds {
        &self.thresholds
    }

    pub fn brevity_score(&self, text: &str) -> CriterionScore {
        let words = word_count(text);
        let max = self.thresholds.brevity_max_words;
        let passed = (1..=max).contains(&words);
        let detail = if words == 0 {
            "empty reply".to_owned()
        } else if passed {
            format!("{words} words")
        } else {
            format!("{words} words exceeds limit of {max}")
        };
        CriterionScore { criterion: Criterion::Brevity, value: words as f64, passed, detail }
    }

    pub fn tone_score(&self, text: &str) -> CriterionScore {
        let hits: Vec<f64> = lexical_tokens(text).iter().filter_map(|t| self.valence.get(t)).collect();
        let value = if hits.is_empty() { 0.0 } else { hits.iter().sum::<f64>() / hits.len() as f64 };
        let passed = value >= self.thresholds.tone_min;
        CriterionScore {
            criterion: Criterion::Tone,
            value,
            passed,
            detail: format!("mean valence {value:.3} over {} hits", hits.len()),
        }
    }

    pub fn specificity_breakdown(&self, text: &str) -> SpecificityBreakdown {
        let mut entities = Vec::new();
        let mut descriptive_hits = 0;
        let mut words = 0;
        let mut sentence_start = true;
        for raw in text.split_whitespace() {
            words += 1;
            let token = strip_token(raw);
            if !token.is_empty() {
                let is_numeric = token.chars().any(|c| c.is_ascii_digit());
                let capitalized = token.chars().next().is_some_and(char::is_uppercase);
                if is_numeric || (capitalized && !sentence_start && !FIRST_PERSON.contains(&token)) {
                    entities.push(token.to_owned());
                }
                if self.descriptive.contains(&token.to_lowercase()) {
                    descriptive_hits += 1;
                }
            }
            sentence_start = ends_sentence(raw);
        }
        let density = if words == 0 { 0.0 } else { descriptive_hits as f64 / words as f64 };
        SpecificityBreakdown { entities, descriptive_hits, words, density }
    }

    pub fn specificity_score(&self, text: &str) -> CriterionScore {
        let b = self.specificity_breakdown(text);
        let passed = b.entities.len() <= self.thresholds.named_entity_max
            && b.density <= self.thresholds.descriptive_density_max;
        CriterionScore {
            criterion: Criterion::Specificity,
            value: b.entities.len() as f64,
            passed,
            detail: format!("{} named entities, descriptive density {:.3}", b.entities.len(), b.density),
        }
    }

    pub fn coherence_score(&self, text: &str, context: &DialogueContext) -> CriterionScore {
        let recent = context.last_turns(self.thresholds.context_depth);
        if recent.is_empty() {
            return CriterionScore {
                criterion: Criterion::Coherence,
                value: 1.0,
                passed: true,
                detail: "no context".to_owned(),
            };
        }
        let joined = recent.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
        let value = cosine(&self.embedder.embed(text), &self.embedder.embed(&joined));
        let (lo, hi) = (self.thresholds.coherence_lo, self.thresholds.coherence_hi);
        let passed = (lo..=hi).contains(&value);
        let detail = if value < lo {
            format!("similarity {value:.3} below {lo}: off topic")
        } else if value > hi {
            format!("similarity {value:.3} above {hi}: repeats the context")
        } else {
            format!("similarity {value:.3}")
        };
        CriterionScore { criterion: Criterion::Coherence, value, passed, detail }
    }

    /// Runs all four scorers and assembles the corrective directive.
    pub fn evaluate(&self, text: &str, context: &DialogueContext) -> ObserverVerdict {
        let scores = vec![
            self.brevity_score(text),
            self.tone_score(text),
            self.specificity_score(text),
            self.coherence_score(text, context),
        ];
        let overall_pass = scores.iter().all(|s| s.passed);
        let directive = if overall_pass {
            None
        } else {
            let clauses: Vec<String> =
                scores.iter().filter(|s| !s.passed).map(|s| self.directive_clause(s)).collect();
            Some(clauses.join(" "))
        };
        ObserverVerdict { scores, overall_pass, directive }
    }

    fn directive_clause(&self, score: &CriterionScore) -> String {
        match score.criterion {
            Criterion::Brevity if score.value == 0.0 => {
                "Reply with a short sentence instead of staying silent.".to_owned()
            }
            Criterion::Brevity => {
                format!("Keep your reply under {} words.", self.thresholds.brevity_max_words)
            }
            Criterion::Tone => "Use a warmer, more positive tone.".to_owned(),
            Criterion::Specificity => {
                "Keep the topic general and avoid specific names, numbers or detailed descriptions."
                    .to_owned()
            }
            Criterion::Coherence if score.value > self.thresholds.coherence_hi => {
                "Respond in your own words instead of repeating what was just said.".to_owned()
            }
            Criterion::Coherence => "Stay on the topic of the conversation.".to_owned(),
        }
    }
}

impl Guardrail for Observer {
    fn evaluate(&self, text: &str, context: &DialogueContext) -> ObserverVerdict {
        Observer::evaluate(self, text, context)
    }

    fn mediate(
        &self,
        context: &DialogueContext,
        speaker: &mut dyn crate::speakers::SpeakerModel,
        persona: &str,
    ) -> Result<Mediation, ObserverError> {
        mediate(self, context, speaker, persona)
    }
}

fn ends_sentence(raw: &str) -> bool {
    let trimmed = raw.trim_end_matches(['"', '\'', ')', ']', '\u{201D}', '\u{2019}']);
    trimmed.ends_with(['.', '!', '?'])
}

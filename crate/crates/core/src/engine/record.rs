use serde::{Deserialize, Serialize};

use crate::types::{Speaker, ViolationCounts};

/// One timed, attributed utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
    pub start_ms: i64,
    pub end_ms: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eye_contact: Option<bool>,
}

impl Utterance {
    pub fn new(speaker: Speaker, text: impl Into<String>, start_ms: i64, end_ms: i64) -> Self {
        Self { speaker, text: text.into(), start_ms, end_ms: end_ms.max(start_ms), eye_contact: None }
    }

    pub fn with_eye_contact(mut self, eye_contact: Option<bool>) -> Self {
        self.eye_contact = eye_contact;
        self
    }

    pub fn duration_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }
}

/// A single small-talk conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub id: String,
    pub session_id: String,
    pub utterances: Vec<Utterance>,
    pub initiated_by: Speaker,
    /// Rounds after the greeting exchange, fixed when the conversation starts.
    pub round_budget: u32,
    /// Leading utterances that belong to the greeting exchange.
    pub greeting_utterances: usize,
    /// Observer failures on the user's post-greeting utterances.
    pub violations: ViolationCounts,
    pub started_at: i64,
    pub ended_at: Option<i64>,
}

impl ConversationRecord {
    pub fn new(
        id: impl Into<String>,
        session_id: impl Into<String>,
        initiated_by: Speaker,
        round_budget: u32,
        started_at: i64,
    ) -> Self {
        Self {
            id: id.into(),
            session_id: session_id.into(),
            utterances: Vec::new(),
            initiated_by,
            round_budget,
            greeting_utterances: 0,
            violations: ViolationCounts::default(),
            started_at,
            ended_at: None,
        }
    }

    pub fn post_greeting(&self) -> &[Utterance] {
        &self.utterances[self.greeting_utterances.min(self.utterances.len())..]
    }

    pub fn is_complete(&self) -> bool {
        self.ended_at.is_some()
    }

    /// The user's post-greeting utterances that end in a question mark.
    pub fn user_questions(&self) -> impl Iterator<Item = &Utterance> {
        self.post_greeting().iter().filter(|u| u.speaker == Speaker::User && u.text.trim_end().ends_with('?'))
    }
}

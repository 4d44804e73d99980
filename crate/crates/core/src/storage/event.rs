use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::Speaker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Wake,
    RobotUtterance,
    UserUtterance,
    FeedbackMicro,
    FeedbackMacro,
    DemonstrationLine,
    StateChange,
    Skip,
    Health,
}

impl EventType {
    pub fn is_utterance(self) -> bool {
        matches!(self, EventType::RobotUtterance | EventType::UserUtterance)
    }
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub ts_ms: i64,
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversation_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_index: Option<u32>,
    pub event_type: EventType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<Speaker>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eye_contact: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl EventRecord {
    pub fn new(ts_ms: i64, session_id: impl Into<String>, event_type: EventType) -> Self {
        Self {
            ts_ms,
            session_id: session_id.into(),
            conversation_id: None,
            turn_index: None,
            event_type,
            speaker: None,
            text: None,
            duration_ms: None,
            eye_contact: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn utterance(
        ts_ms: i64,
        session_id: impl Into<String>,
        conversation_id: impl Into<String>,
        turn_index: u32,
        speaker: Speaker,
        text: impl Into<String>,
        duration_ms: i64,
    ) -> Self {
        let event_type = match speaker {
            Speaker::Robot => EventType::RobotUtterance,
            Speaker::User => EventType::UserUtterance,
        };
        Self {
            conversation_id: Some(conversation_id.into()),
            turn_index: Some(turn_index),
            speaker: Some(speaker),
            text: Some(text.into()),
            duration_ms: Some(duration_ms),
            ..Self::new(ts_ms, session_id, event_type)
        }
    }

    pub fn with_conversation(mut self, id: impl Into<String>) -> Self {
        self.conversation_id = Some(id.into());
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn with_extra(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extra.get(key).map(String::as_str)
    }

    /// Checks the per-type field requirements.
    pub fn validate(&self) -> Result<(), String> {
        if self.event_type.is_utterance() {
            if self.speaker.is_none() || self.text.is_none() || self.duration_ms.is_none() {
                return Err(format!("{:?} requires speaker, text and duration_ms", self.event_type));
            }
            if self.duration_ms.is_some_and(|d| d < 0) {
                return Err("duration_ms must be nonnegative".into());
            }
        }
        if self.session_id.is_empty() {
            return Err("session_id must not be empty".into());
        }
        Ok(())
    }
}

//! Rebuilding engine bookkeeping from persisted transcripts after a restart.

use std::collections::BTreeMap;

use super::{ConversationRecord, Engine, Phase, SessionBook, Utterance};
use crate::storage::{EventRecord, EventType};
use crate::types::{Criterion, Speaker, ViolationCounts};

pub fn session_id_for(index: u32) -> String {
    format!("session-{index:04}")
}

pub fn session_index_of(session_id: &str) -> Option<u32> {
    session_id.strip_prefix("session-")?.parse().ok()
}

fn is_session_close(r: &EventRecord) -> bool {
    r.event_type == EventType::StateChange && r.extra("event") == Some("session_closed")
}

impl Engine {
    /// Resumes from `records` (any order). A closed session moves the engine
    /// to the next index; an open one keeps its completed conversations and
    /// drops whatever conversation was in flight.
    pub fn restore(mut self, records: &[EventRecord]) -> Self {
        let mut by_session: BTreeMap<u32, Vec<&EventRecord>> = BTreeMap::new();
        for r in records {
            if let Some(i) = session_index_of(&r.session_id) {
                by_session.entry(i).or_default().push(r);
            }
        }
        let Some((&last, recs)) = by_session.iter().next_back() else {
            return self;
        };
        let mut recs = recs.clone();
        recs.sort_by_key(|r| r.ts_ms);

        self.clock_ms = records.iter().map(|r| r.ts_ms).max().unwrap_or(0);
        self.state.phase = Phase::Idle;
        self.state.conversation = None;
        self.state.rounds_remaining = 0;
        self.book = SessionBook::default();

        if recs.iter().any(|r| is_session_close(r)) {
            self.state.session_index = last + 1;
            return self;
        }
        self.state.session_index = last;
        self.book.started = true;
        self.book.conversations_opened = recs
            .iter()
            .filter_map(|r| r.conversation_id.as_deref())
            .collect::<std::collections::BTreeSet<_>>()
            .len() as u32;
        for micro in recs.iter().filter(|r| r.event_type == EventType::FeedbackMicro) {
            if let Some(conv) = rebuild_conversation(micro, &recs) {
                self.book.completed.push(conv);
            }
        }
        self
    }
}

fn rebuild_conversation(micro: &EventRecord, recs: &[&EventRecord]) -> Option<ConversationRecord> {
    let id = micro.conversation_id.clone()?;
    let initiated_by = match micro.extra("initiated_by")? {
        "robot" => Speaker::Robot,
        _ => Speaker::User,
    };
    let num = |k: &str| micro.extra(k).and_then(|v| v.parse::<i64>().ok());
    let pairs: Vec<(Criterion, u32)> = Criterion::ALL
        .into_iter()
        .map(|c| {
            let n = micro.extra(&format!("violations.{c}")).and_then(|v| v.parse().ok()).unwrap_or(0);
            (c, n)
        })
        .collect();
    let mut conv = ConversationRecord::new(
        id.clone(),
        micro.session_id.clone(),
        initiated_by,
        num("round_budget").unwrap_or(0) as u32,
        num("started_at").unwrap_or(micro.ts_ms),
    );
    conv.greeting_utterances = num("greeting_utterances").unwrap_or(0) as usize;
    conv.violations = ViolationCounts::from_pairs(&pairs);
    conv.ended_at = Some(micro.ts_ms);
    conv.utterances = recs
        .iter()
        .filter(|r| r.event_type.is_utterance() && r.conversation_id.as_deref() == Some(&id))
        .filter_map(|r| {
            let start = r.ts_ms;
            Some(
                Utterance::new(r.speaker?, r.text.clone()?, start, start + r.duration_ms?)
                    .with_eye_contact(r.eye_contact),
            )
        })
        .collect();
    Some(conv)
}

//! Transcript measures: greetings, initiation, turn timing, balance and eye
//! contact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::engine::{session_index_of, ConversationRecord, Utterance};
use crate::storage::{EventRecord, EventType};
use crate::types::{Criterion, Speaker, ViolationCounts};

pub const GREETING_PHRASES: [&str; 8] =
    ["hello", "hi", "hey", "good morning", "good afternoon", "good evening", "howdy", "what's up"];

/// True when the utterance opens with a greeting phrase and sits within the
/// first full turn. The phrase must end at a word boundary, so "hiking" is
/// not "hi".
pub fn detect_greeting(text: &str, turn_index: u32) -> bool {
    if turn_index > 1 {
        return false;
    }
    let lower = text.trim_start().to_lowercase().replace('\u{2019}', "'");
    GREETING_PHRASES.iter().any(|p| {
        lower
            .strip_prefix(p)
            .is_some_and(|rest| rest.chars().next().is_none_or(|c| !c.is_alphanumeric() && c != '\''))
    })
}

pub fn initiation_rate(conversations: &[ConversationRecord]) -> Result<f64, AnalyticsError> {
    if conversations.is_empty() {
        return Err(AnalyticsError::EmptySession);
    }
    let user = conversations.iter().filter(|c| c.initiated_by == Speaker::User).count();
    Ok(user as f64 / conversations.len() as f64)
}

/// Per-utterance timing, seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TurnMetrics {
    pub durations_s: Vec<f64>,
    /// Gap before each utterance after the first; overlaps count as zero.
    pub gaps_s: Vec<f64>,
    /// Duration of each utterance after the first over its predecessor's.
    /// `None` when the predecessor has zero length.
    pub balances: Vec<Option<f64>>,
}

pub fn turn_metrics(conversation: &ConversationRecord) -> Result<TurnMetrics, AnalyticsError> {
    let u = &conversation.utterances;
    for (i, x) in u.iter().enumerate() {
        if x.end_ms < x.start_ms {
            return Err(AnalyticsError::NonChronological { index: i });
        }
        if i > 0 && x.start_ms < u[i - 1].start_ms {
            return Err(AnalyticsError::NonChronological { index: i });
        }
    }
    let durations_s: Vec<f64> = u.iter().map(|x| x.duration_ms() as f64 / 1000.0).collect();
    let gaps_s = u.windows(2).map(|w| ((w[1].start_ms - w[0].end_ms).max(0)) as f64 / 1000.0).collect();
    let balances = durations_s.windows(2).map(|w| (w[0] > 0.0).then(|| w[1] / w[0])).collect();
    Ok(TurnMetrics { durations_s, gaps_s, balances })
}

pub fn eye_contact_rate(conversation: &ConversationRecord) -> Result<f64, AnalyticsError> {
    eye_contact_over(&conversation.utterances)
}

fn eye_contact_over(utterances: &[Utterance]) -> Result<f64, AnalyticsError> {
    let labels: Vec<bool> = utterances.iter().filter_map(|u| u.eye_contact).collect();
    if labels.is_empty() {
        return Err(AnalyticsError::NoLabels);
    }
    Ok(labels.iter().filter(|b| **b).count() as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session_index: u32,
    pub initiation_rate: f64,
    pub mean_user_turn_s: f64,
    pub mean_inter_turn_s: f64,
    /// Mean over the user's responses to the robot.
    pub mean_balance: f64,
    /// `None` when no utterance in the session carries a label.
    pub eye_contact_rate: Option<f64>,
    pub violation_counts: BTreeMap<Criterion, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort_label: Option<String>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn session_metrics(
    session_index: u32,
    conversations: &[ConversationRecord],
) -> Result<SessionMetrics, AnalyticsError> {
    let initiation_rate = initiation_rate(conversations)?;
    let mut user_turns = Vec::new();
    let mut gaps = Vec::new();
    let mut balances = Vec::new();
    let mut all_utterances = Vec::new();
    let mut violations = ViolationCounts::default();
    for c in conversations {
        let t = turn_metrics(c)?;
        for (i, u) in c.utterances.iter().enumerate() {
            if u.speaker == Speaker::User {
                user_turns.push(t.durations_s[i]);
                if i > 0 && c.utterances[i - 1].speaker == Speaker::Robot {
                    balances.extend(t.balances[i - 1]);
                }
            }
        }
        gaps.extend(t.gaps_s);
        all_utterances.extend(c.utterances.iter().cloned());
        violations.merge(&c.violations);
    }
    Ok(SessionMetrics {
        session_index,
        initiation_rate,
        mean_user_turn_s: mean(user_turns),
        mean_inter_turn_s: mean(gaps),
        mean_balance: mean(balances),
        eye_contact_rate: eye_contact_over(&all_utterances).ok(),
        violation_counts: Criterion::ALL.into_iter().map(|c| (c, violations.get(c))).collect(),
        cohort_label: None,
    })
}

/// Rebuilds conversations from transcript records, grouped by session index.
///
/// A conversation is kept when the user spoke in it at least once; abandoned
/// greetings are not conversations. It was initiated by whoever spoke first.
/// Violations come from the `failed` list on user utterances.
pub fn conversations_by_session(records: &[EventRecord]) -> BTreeMap<u32, Vec<ConversationRecord>> {
    let mut grouped: BTreeMap<(u32, String), Vec<&EventRecord>> = BTreeMap::new();
    for r in records {
        let (Some(conv), Some(idx)) = (&r.conversation_id, session_index_of(&r.session_id)) else {
            continue;
        };
        grouped.entry((idx, conv.clone())).or_default().push(r);
    }
    let mut out: BTreeMap<u32, Vec<ConversationRecord>> = BTreeMap::new();
    for ((idx, conv_id), mut recs) in grouped {
        recs.sort_by_key(|r| (r.ts_ms, r.turn_index));
        let utterances: Vec<&EventRecord> =
            recs.iter().copied().filter(|r| r.event_type.is_utterance()).collect();
        if !utterances.iter().any(|r| r.speaker == Some(Speaker::User)) {
            continue;
        }
        let first = utterances[0];
        let mut conv = ConversationRecord::new(
            conv_id,
            first.session_id.clone(),
            first.speaker.unwrap_or(Speaker::Robot),
            0,
            first.ts_ms,
        );
        for r in &utterances {
            let (Some(speaker), Some(text), Some(d)) = (r.speaker, &r.text, r.duration_ms) else {
                continue;
            };
            conv.utterances.push(
                Utterance::new(speaker, text.clone(), r.ts_ms, r.ts_ms + d).with_eye_contact(r.eye_contact),
            );
            if speaker == Speaker::User {
                for c in r.extra("failed").unwrap_or("").split(',') {
                    if let Some(c) = Criterion::parse(c.trim()) {
                        conv.violations.increment(c);
                    }
                }
            }
        }
        if let Some(micro) = recs.iter().find(|r| r.event_type == EventType::FeedbackMicro) {
            conv.ended_at = Some(micro.ts_ms);
            conv.round_budget = micro.extra("round_budget").and_then(|v| v.parse().ok()).unwrap_or(0);
            conv.greeting_utterances =
                micro.extra("greeting_utterances").and_then(|v| v.parse().ok()).unwrap_or(0);
        }
        out.entry(idx).or_default().push(conv);
    }
    out
}

/// Metrics for every session in `records` that has at least one conversation.
pub fn metrics_from_records(records: &[EventRecord]) -> Vec<SessionMetrics> {
    conversations_by_session(records)
        .into_iter()
        .filter_map(|(idx, convs)| match session_metrics(idx, &convs) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("session {idx}: {e}");
                None
            }
        })
        .collect()
}

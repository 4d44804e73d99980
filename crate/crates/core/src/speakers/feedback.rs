//! Micro feedback after each conversation and macro feedback at the end of a
//! session. Template-first; an optional speaking model may rephrase the
//! rendered text.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{SpeakerModel, SpeakerRequest};
use crate::engine::ConversationRecord;
use crate::observer::{DialogueContext, ObserverVerdict};
use crate::text::sentence_count;
use crate::types::{Criterion, Speaker, ViolationCounts};

/// Session violation count at which a criterion earns a macro improvement.
pub const MACRO_WARNING_LEVEL: u32 = 1;
pub const MACRO_IMPROVEMENT_CAP: usize = 3;

const GENERIC_ENCOURAGEMENT: &str = "Keep practicing the same way in our next conversation.";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeedbackError {
    #[error("no completed conversations in the session")]
    EmptySession,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackLevel {
    Micro,
    Macro,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Improvement {
    /// `None` for the generic encouragement given when nothing was violated.
    pub criterion: Option<Criterion>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackItem {
    pub level: FeedbackLevel,
    pub praise: String,
    /// Micro: exactly one. Macro: at most three.
    pub improvements: Vec<Improvement>,
    pub session_id: String,
    pub conversation_id: Option<String>,
    /// What the robot actually says.
    pub spoken: String,
}

impl FeedbackItem {
    fn render(&mut self) {
        let mut parts = vec![self.praise.clone()];
        parts.extend(self.improvements.iter().map(|i| i.text.clone()));
        self.spoken = parts.join(" ");
    }
}

fn praise_phrase(c: Criterion) -> &'static str {
    match c {
        Criterion::Brevity => "You kept your replies short and easy to follow.",
        Criterion::Tone => "You kept a warm, friendly tone throughout our chat.",
        Criterion::Specificity => "You kept the topics general, which made it easy for me to join in.",
        Criterion::Coherence => "You stayed on topic and built on what I said.",
    }
}

fn micro_improvement(c: Criterion) -> &'static str {
    match c {
        Criterion::Brevity => "Next time, try keeping each reply to a sentence or two.",
        Criterion::Tone => "Next time, try adding a few positive words to keep the mood light.",
        Criterion::Specificity => {
            "Next time, try sharing general topics instead of specific names or places."
        }
        Criterion::Coherence => "Next time, try building on what I just said before changing the topic.",
    }
}

fn macro_skill(c: Criterion) -> &'static str {
    match c {
        Criterion::Brevity => "keeping your replies concise",
        Criterion::Tone => "keeping a positive tone",
        Criterion::Specificity => "keeping the topics easy to share",
        Criterion::Coherence => "staying on topic",
    }
}

fn macro_improvement(c: Criterion) -> &'static str {
    match c {
        Criterion::Brevity => "For our next conversations, try keeping your responses more concise.",
        Criterion::Tone => "For our next conversations, try keeping your responses more positive.",
        Criterion::Specificity => {
            "For our next conversations, try chatting about general topics like the weather or weekend plans."
        }
        Criterion::Coherence => {
            "For our next conversations, try keeping your responses related to what we are discussing."
        }
    }
}

/// Feedback on one finished conversation.
///
/// `verdicts` are the observer verdicts on the user's post-greeting
/// utterances, oldest first. The improvement targets the most violated
/// criterion, ties going to the one violated most recently. Praise names the
/// criterion with the best pass rate (excluding the improvement target) and
/// quotes a question the user asked, if any.
pub fn generate_micro_feedback(
    conversation: &ConversationRecord,
    verdicts: &[ObserverVerdict],
) -> FeedbackItem {
    let mut counts = ViolationCounts::default();
    let mut last_violation = [None::<usize>; 4];
    let mut passes = [0usize; 4];
    for (i, v) in verdicts.iter().enumerate() {
        for s in &v.scores {
            if s.passed {
                passes[s.criterion.index()] += 1;
            } else {
                counts.increment(s.criterion);
                last_violation[s.criterion.index()] = Some(i);
            }
        }
    }

    let target = Criterion::ALL
        .into_iter()
        .filter(|c| counts.get(*c) > 0)
        .max_by_key(|c| (counts.get(*c), last_violation[c.index()]));

    let best = Criterion::ALL
        .into_iter()
        .filter(|c| Some(*c) != target)
        .fold(None::<Criterion>, |best, c| match best {
            Some(b) if passes[b.index()] >= passes[c.index()] => Some(b),
            _ => Some(c),
        })
        .unwrap_or(Criterion::Brevity);

    let mut praise = praise_phrase(best).to_owned();
    if let Some(q) = conversation.user_questions().last() {
        praise.push_str(&format!(" I liked it when you asked, \"{}\"", q.text.trim()));
    }

    let improvement = match target {
        Some(c) => Improvement { criterion: Some(c), text: micro_improvement(c).to_owned() },
        None => Improvement { criterion: None, text: GENERIC_ENCOURAGEMENT.to_owned() },
    };

    let mut item = FeedbackItem {
        level: FeedbackLevel::Micro,
        praise,
        improvements: vec![improvement],
        session_id: conversation.session_id.clone(),
        conversation_id: Some(conversation.id.clone()),
        spoken: String::new(),
    };
    item.render();
    item
}

/// Summary feedback over every completed conversation of a session.
pub fn generate_macro_feedback(session: &[ConversationRecord]) -> Result<FeedbackItem, FeedbackError> {
    let completed: Vec<&ConversationRecord> = session.iter().filter(|c| c.is_complete()).collect();
    let first = completed.first().ok_or(FeedbackError::EmptySession)?;

    let mut totals = ViolationCounts::default();
    for c in &completed {
        totals.merge(&c.violations);
    }

    let mut flagged: Vec<Criterion> =
        Criterion::ALL.into_iter().filter(|c| totals.get(*c) >= MACRO_WARNING_LEVEL).collect();
    // Stable sort keeps criterion order among equal counts.
    flagged.sort_by_key(|c| std::cmp::Reverse(totals.get(*c)));
    flagged.truncate(MACRO_IMPROVEMENT_CAP);

    let strongest = Criterion::ALL.into_iter().min_by_key(|c| totals.get(*c)).unwrap_or(Criterion::Brevity);
    let n = completed.len();
    let praise = format!(
        "You did a great job at {} throughout our {} today.",
        macro_skill(strongest),
        if n == 1 { "conversation".to_owned() } else { format!("{n} conversations") }
    );

    let mut item = FeedbackItem {
        level: FeedbackLevel::Macro,
        praise,
        improvements: flagged
            .into_iter()
            .map(|c| Improvement { criterion: Some(c), text: macro_improvement(c).to_owned() })
            .collect(),
        session_id: first.session_id.clone(),
        conversation_id: None,
        spoken: String::new(),
    };
    item.render();
    Ok(item)
}

/// Asks `speaker` to reword the rendered feedback. The template text is kept
/// when the speaker fails or its reply is empty or too long.
pub fn rephrase_feedback(item: &FeedbackItem, speaker: &mut dyn SpeakerModel) -> FeedbackItem {
    let max_sentences = match item.level {
        FeedbackLevel::Micro => 2,
        FeedbackLevel::Macro => 4,
    };
    let request = SpeakerRequest {
        context: DialogueContext::new().with_turn(Speaker::User, item.spoken.clone()),
        system_directive: format!(
            "Rephrase this coaching feedback for an adult practicing small talk. \
             Be specific, timely, constructive, objective and respectful. \
             Keep every point and use at most {max_sentences} sentences."
        ),
        max_candidates_hint: 1,
    };
    let mut out = item.clone();
    match speaker.respond(&request) {
        Ok(text) if !text.trim().is_empty() && sentence_count(&text) <= max_sentences => {
            out.spoken = text.trim().to_owned();
        }
        Ok(_) => log::info!("rephrased feedback rejected; using template"),
        Err(e) => log::info!("feedback rephrasing unavailable ({e}); using template"),
    }
    out
}

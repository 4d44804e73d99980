//! The feedback-redirection loop.

use serde::{Deserialize, Serialize};

use super::{DialogueContext, Observer, ObserverError, ObserverVerdict};
use crate::speakers::{SpeakerModel, SpeakerRequest};
use crate::text::word_count;

/// Regenerations allowed after the initial candidate.
pub const MAX_REGENERATIONS: usize = 3;

/// Used when the caller supplies an empty persona.
const FALLBACK_PERSONA: &str =
    "You are a friendly companion making casual small talk. Reply in one or two short sentences.";

/// Outcome of one mediated robot turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mediation {
    /// The utterance that ships.
    pub text: String,
    /// Candidates produced and scored, in [1, 4].
    pub attempts: usize,
    /// One verdict per scored candidate, in order.
    pub verdicts: Vec<ObserverVerdict>,
    pub candidates: Vec<String>,
    /// Whether the shipped text passed every criterion.
    pub passed: bool,
}

impl Mediation {
    pub fn regenerations(&self) -> usize {
        self.attempts.saturating_sub(1)
    }
}

/// Asks `speaker` for a reply, scoring every candidate and feeding the
/// observer's directive back as the next system prompt until a candidate
/// passes or the regeneration budget is spent.
///
/// A speaker error consumes one call from the budget without producing a
/// candidate. If no call succeeds the result is `SpeakerUnavailable`. When no
/// candidate passes, the one with the most passed criteria ships; ties go to
/// the shorter text, then the earlier one.
pub fn mediate(
    observer: &Observer,
    context: &DialogueContext,
    speaker: &mut dyn SpeakerModel,
    persona: &str,
) -> Result<Mediation, ObserverError> {
    let persona = if persona.trim().is_empty() { FALLBACK_PERSONA } else { persona.trim() };
    let mut candidates: Vec<String> = Vec::new();
    let mut verdicts: Vec<ObserverVerdict> = Vec::new();
    let mut directive: Option<String> = None;
    let mut last_error = None;

    for call in 0..=MAX_REGENERATIONS {
        let system_directive = match &directive {
            Some(d) => format!("{persona} {d}"),
            None => persona.to_owned(),
        };
        let request = SpeakerRequest {
            context: context.clone(),
            system_directive,
            max_candidates_hint: MAX_REGENERATIONS + 1 - call,
        };
        match speaker.respond(&request) {
            Ok(text) => {
                let verdict = observer.evaluate(&text, context);
                let passed = verdict.overall_pass;
                directive = verdict.directive.clone();
                candidates.push(text);
                verdicts.push(verdict);
                if passed {
                    return Ok(Mediation {
                        text: candidates.last().cloned().unwrap_or_default(),
                        attempts: candidates.len(),
                        verdicts,
                        candidates,
                        passed: true,
                    });
                }
            }
            Err(e) => {
                log::warn!("speaker call {} failed: {e}", call + 1);
                last_error = Some(e);
            }
        }
    }

    if candidates.is_empty() {
        let reason = last_error.map(|e| e.to_string()).unwrap_or_default();
        return Err(ObserverError::SpeakerUnavailable(reason));
    }
    let best = best_candidate(&candidates, &verdicts);
    Ok(Mediation {
        text: candidates[best].clone(),
        attempts: candidates.len(),
        verdicts,
        candidates,
        passed: false,
    })
}

fn best_candidate(candidates: &[String], verdicts: &[ObserverVerdict]) -> usize {
    let mut best = 0;
    for i in 1..candidates.len() {
        let (p, bp) = (verdicts[i].passed_count(), verdicts[best].passed_count());
        if p > bp || (p == bp && word_count(&candidates[i]) < word_count(&candidates[best])) {
            best = i;
        }
    }
    best
}

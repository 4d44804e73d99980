//! Offline stand-in for the speaking model used by simulations.
//!
//! Reproduces the failure modes the observer exists to catch: first drafts
//! are often long and detail-heavy, and drafts written under a brevity or
//! specificity directive come back short and general.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SpeakerError, SpeakerModel, SpeakerRequest};
use crate::text::lexical_tokens;
use crate::types::Speaker;

const ADJECTIVES: [&str; 6] = ["lovely", "fun", "nice", "great", "relaxing", "pleasant"];

const QUESTIONS: [&str; 6] = [
    "What else did you do today?",
    "Do you do that often?",
    "What are you looking forward to this week?",
    "How did that go?",
    "What do you enjoy most about it?",
    "Any plans for later?",
];

const DETOURS: [&str; 3] = [
    "I once read that the Golden Gate Bridge in San Francisco was painted International Orange in 1937, which is a remarkably vivid and specific detail that I find absolutely fascinating to think about",
    "Speaking of that, my favorite recipe uses 3 cups of flour, 2 eggs and a very precisely measured pinch of saffron from Spain, and it takes exactly 45 minutes to bake",
    "That reminds me of an extremely long documentary about the Amazon River that covered every single tributary in enormous and meticulous detail over four very long hours",
];

const STOPWORDS: [&str; 20] = [
    "the", "and", "but", "was", "have", "been", "this", "that", "with", "about", "today", "what", "your",
    "you", "are", "just", "some", "very", "really", "from",
];

#[derive(Debug, Clone)]
pub struct SimulatedRobot {
    rng: ChaCha8Rng,
    verbose_rate: f64,
}

impl SimulatedRobot {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), verbose_rate: 0.45 }
    }

    pub fn with_verbose_rate(mut self, rate: f64) -> Self {
        self.verbose_rate = rate.clamp(0.0, 1.0);
        self
    }

    fn echo_words(request: &SpeakerRequest) -> Vec<String> {
        let Some(last_user) = request.context.turns.iter().rev().find(|t| t.speaker == Speaker::User) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for t in lexical_tokens(&last_user.text) {
            if t.len() > 3 && !STOPWORDS.contains(&t.as_str()) && !out.contains(&t) {
                out.push(t);
            }
            if out.len() == 2 {
                break;
            }
        }
        out
    }
}

impl SpeakerModel for SimulatedRobot {
    fn respond(&mut self, request: &SpeakerRequest) -> Result<String, SpeakerError> {
        let directive = request.system_directive.to_lowercase();
        let corrected = directive.contains("words") || directive.contains("general");
        let adj = ADJECTIVES[self.rng.random_range(0..ADJECTIVES.len())];
        let question = QUESTIONS[self.rng.random_range(0..QUESTIONS.len())];
        let echo = Self::echo_words(request);
        let mut reply = match echo.as_slice() {
            [] => format!("That sounds {adj}."),
            [w] => format!("Oh, {w}? That sounds {adj}."),
            [a, b, ..] => format!("Oh, {a} and {b}? That sounds {adj}."),
        };
        reply.push(' ');
        reply.push_str(question);
        if !corrected && self.rng.random_bool(self.verbose_rate) {
            let detour = DETOURS[self.rng.random_range(0..DETOURS.len())];
            reply = format!("{reply} {detour}.");
        }
        Ok(reply)
    }
}

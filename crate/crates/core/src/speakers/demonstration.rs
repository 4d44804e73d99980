//! Bundled two-character demonstrations, one per criterion.

use serde::{Deserialize, Serialize};

use crate::types::Criterion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Character {
    A,
    B,
}

impl Character {
    /// Voice metadata for the UI; the two characters must sound distinct.
    pub fn voice(self) -> &'static str {
        match self {
            Character::A => "high_fast",
            Character::B => "low_slow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemonstrationLine {
    pub character: Character,
    pub line: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemonstrationScript {
    pub violated_criterion: Criterion,
    /// Three A/B exchanges, strictly alternating, A first.
    pub exchanges: Vec<DemonstrationLine>,
}

const BREVITY: [&str; 6] = [
    "Hi! How was your weekend?",
    "It was relaxing, thanks. I mostly read. How about yours?",
    "Pretty good! I went for a walk.",
    "That sounds nice. Was the weather good?",
    "Yes, it was sunny and mild.",
    "Lovely. I hope it stays that way!",
];

const TONE: [&str; 6] = [
    "How has your week been?",
    "It's been busy, but I'm glad it's almost the weekend.",
    "Same here! Any fun plans?",
    "Maybe a movie. I love a cozy night in.",
    "That sounds great.",
    "Thanks! I hope you have a relaxing weekend too.",
];

const SPECIFICITY: [&str; 6] = [
    "What do you like to do for fun?",
    "I like cooking and going on walks. What about you?",
    "I enjoy music and reading.",
    "Nice! What kind of music do you like?",
    "Mostly calm songs for relaxing.",
    "That sounds peaceful.",
];

const COHERENCE: [&str; 6] = [
    "Do you like cooking?",
    "I do like cooking, especially on weekends.",
    "Cooking on weekends sounds relaxing.",
    "It is relaxing. Do you cook on weekends too?",
    "Sometimes I cook pasta on weekends.",
    "Pasta is a great weekend meal.",
];

/// The bundled exemplar dialogue for `criterion`.
pub fn build_demonstration(criterion: Criterion) -> DemonstrationScript {
    let lines = match criterion {
        Criterion::Brevity => BREVITY,
        Criterion::Tone => TONE,
        Criterion::Specificity => SPECIFICITY,
        Criterion::Coherence => COHERENCE,
    };
    let exchanges = lines
        .iter()
        .enumerate()
        .map(|(i, l)| DemonstrationLine {
            character: if i % 2 == 0 { Character::A } else { Character::B },
            line: (*l).to_owned(),
        })
        .collect();
    DemonstrationScript { violated_criterion: criterion, exchanges }
}

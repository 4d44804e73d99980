//! Simulated trainees for desk-scale studies and end-to-end tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::observer::DialogueContext;
use crate::types::Speaker;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAgentProfile {
    pub name: String,
    pub initiation_prob_base: f64,
    /// Added per session index.
    pub initiation_prob_slope: f64,
    pub verbosity_mean_words: f64,
    pub entity_injection_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub eye_contact_base: f64,
    #[serde(default)]
    pub eye_contact_slope: f64,
}

impl UserAgentProfile {
    /// Known profiles: `improving` and `static` open at the same 34%
    /// initiation rate; `improving` gains 3.75 points per session, reaching
    /// 64% by session 8. `verbose` is a static profile with long replies.
    pub fn builtin(name: &str, seed: u64) -> Option<Self> {
        let base = Self {
            name: name.to_owned(),
            initiation_prob_base: 0.34,
            initiation_prob_slope: 0.0,
            verbosity_mean_words: 9.0,
            entity_injection_rate: 0.1,
            seed,
            eye_contact_base: 0.24,
            eye_contact_slope: 0.0,
        };
        match name {
            "improving" => Some(Self { initiation_prob_slope: 0.0375, eye_contact_slope: 0.03375, ..base }),
            "static" => Some(base),
            "verbose" => Some(Self { verbosity_mean_words: 38.0, entity_injection_rate: 0.4, ..base }),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["improving", "static", "verbose"]
    }

    pub fn initiation_probability(&self, session_index: u32) -> f64 {
        (self.initiation_prob_base + self.initiation_prob_slope * f64::from(session_index)).clamp(0.0, 1.0)
    }

    pub fn eye_contact_probability(&self, session_index: u32) -> f64 {
        (self.eye_contact_base + self.eye_contact_slope * f64::from(session_index)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentReply {
    /// Whether the agent greets first when the robot wakes up.
    pub initiates: bool,
    pub text: String,
    pub eye_contact: bool,
}

const GREETINGS: [&str; 5] = [
    "Hi! How are you?",
    "Hello! How's it going?",
    "Hey, good to see you.",
    "Good evening! How are you doing?",
    "Hi there, how was your day?",
];

const CLAUSES: [&str; 14] = [
    "I had a pretty relaxing day",
    "the weather was nice today",
    "I watched a movie last night",
    "work was busy but fine",
    "I am thinking about cooking dinner soon",
    "I went for a short walk this afternoon",
    "I have been reading a good book",
    "my weekend plans are still open",
    "I like listening to music in the evening",
    "it was a quiet morning at home",
    "I tried a new recipe and it was good",
    "I might call a friend later",
    "the news was a little boring today",
    "I feel a bit tired but happy",
];

const ENTITY_PHRASES: [&str; 5] = [
    "my cat Cheddar",
    "my neighbor Margaret",
    "the shop on Cedar Street",
    "the 7 o'clock train",
    "the Riverside Park trail",
];

fn mix(seed: u64, session: u32, turn: u32) -> u64 {
    let mut z = seed
        ^ u64::from(session).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ u64::from(turn).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One simulated user move, reproducible from
/// `(profile.seed, session_index, turn_index)`.
///
/// Before the user has spoken in `context` the text is a greeting; later it
/// is a casual reply whose length is drawn around
/// `verbosity_mean_words`.
pub fn user_agent_respond(
    profile: &UserAgentProfile,
    session_index: u32,
    turn_index: u32,
    context: &DialogueContext,
) -> AgentReply {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(profile.seed, session_index, turn_index));
    let initiates = rng.random_bool(profile.initiation_probability(session_index));
    let eye_contact = rng.random_bool(profile.eye_contact_probability(session_index));

    let user_has_spoken = context.turns.iter().any(|t| t.speaker == Speaker::User);
    let text = if user_has_spoken {
        casual_reply(profile, &mut rng)
    } else {
        GREETINGS[rng.random_range(0..GREETINGS.len())].to_owned()
    };
    AgentReply { initiates, text, eye_contact }
}

fn casual_reply(profile: &UserAgentProfile, rng: &mut ChaCha8Rng) -> String {
    let mean = profile.verbosity_mean_words.max(1.0);
    let target =
        Normal::new(mean, mean * 0.3).map(|n| n.sample(rng)).unwrap_or(mean).round().max(2.0) as usize;

    let mut words: Vec<String> = Vec::new();
    while words.len() < target {
        let clause = CLAUSES[rng.random_range(0..CLAUSES.len())];
        words.extend(clause.split_whitespace().map(str::to_owned));
    }
    words.truncate(target);
    if rng.random_bool(profile.entity_injection_rate.clamp(0.0, 1.0)) {
        let phrase = ENTITY_PHRASES[rng.random_range(0..ENTITY_PHRASES.len())];
        let at = rng.random_range(1..=words.len());
        let inserted: Vec<String> = format!("with {phrase}").split_whitespace().map(str::to_owned).collect();
        words.splice(at..at, inserted);
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get(0..1) {
        let upper = first.to_uppercase();
        text.replace_range(0..1, &upper);
    }
    text.push('.');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improving_profile_matches_first_and_final_rates() {
        let p = UserAgentProfile::builtin("improving", 7).unwrap();
        assert!((p.initiation_probability(0) - 0.34).abs() < 1e-12);
        assert!((p.initiation_probability(8) - 0.64).abs() < 1e-12);
        assert!((p.eye_contact_probability(8) - 0.51).abs() < 1e-12);
    }

    #[test]
    fn probabilities_clamp() {
        let mut p = UserAgentProfile::builtin("improving", 1).unwrap();
        p.initiation_prob_slope = 0.5;
        assert_eq!(p.initiation_probability(10), 1.0);
        p.initiation_prob_base = -3.0;
        p.initiation_prob_slope = 0.0;
        assert_eq!(p.initiation_probability(0), 0.0);
    }

    #[test]
    fn unknown_profile() {
        assert!(UserAgentProfile::builtin("nope", 1).is_none());
    }
}

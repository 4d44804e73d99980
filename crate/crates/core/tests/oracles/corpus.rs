//! The hand-labelled mini-corpus and brute-force recomputations of each
//! measure, written from the definitions without the library's helpers.

#![allow(dead_code)]

use serde::Deserialize;
use talktrainer_core::engine::{ConversationRecord, Utterance};
use talktrainer_core::Speaker;

#[derive(Deserialize)]
pub struct Corpus {
    pub conversations: Vec<Conv>,
}

#[derive(Deserialize)]
pub struct Conv {
    pub session_id: String,
    pub conversation_id: String,
    pub initiated_by: Speaker,
    pub utterances: Vec<Utt>,
}

#[derive(Deserialize)]
pub struct Utt {
    pub turn_index: u32,
    pub speaker: Speaker,
    pub text: String,
    pub start_ms: i64,
    pub end_ms: i64,
    pub eye_contact: Option<bool>,
    pub labels: Labels,
}

#[derive(Deserialize)]
pub struct Labels {
    pub words: usize,
    pub entities: usize,
    pub descriptive: usize,
    pub greeting: bool,
}

pub fn corpus() -> Corpus {
    let text = include_str!("../fixtures/mini_corpus.json");
    serde_json::from_str(text).unwrap()
}

pub fn record(c: &Conv) -> ConversationRecord {
    let mut r = ConversationRecord::new(
        c.conversation_id.clone(),
        c.session_id.clone(),
        c.initiated_by,
        8,
        c.utterances[0].start_ms,
    );
    for u in &c.utterances {
        r.utterances.push(
            Utterance::new(u.speaker, u.text.clone(), u.start_ms, u.end_ms).with_eye_contact(u.eye_contact),
        );
    }
    r
}

// Brute-force oracles, written from the definitions.

pub fn bf_words(text: &str) -> usize {
    let mut n = 0;
    let mut inside = false;
    for c in text.chars() {
        if c.is_whitespace() {
            inside = false;
        } else if !inside {
            inside = true;
            n += 1;
        }
    }
    n
}

pub const DESCRIPTIVE: &str = include_str!("../../assets/descriptive.txt");

pub fn bf_tokens(text: &str) -> Vec<(String, bool)> {
    // (stripped token, sentence-initial)
    let mut out = Vec::new();
    let mut initial = true;
    for raw in text.split(' ').filter(|s| !s.is_empty()) {
        let chars: Vec<char> = raw.chars().collect();
        let mut a = 0;
        let mut b = chars.len();
        while a < b && !chars[a].is_alphanumeric() {
            a += 1;
        }
        while b > a && !chars[b - 1].is_alphanumeric() {
            b -= 1;
        }
        out.push((chars[a..b].iter().collect(), initial));
        let last = raw.trim_end_matches(['"', '\'']).chars().last();
        initial = matches!(last, Some('.' | '!' | '?'));
    }
    out
}

pub fn bf_entities(text: &str) -> usize {
    bf_tokens(text)
        .iter()
        .filter(|(t, initial)| {
            let digit = t.chars().any(|c| c.is_ascii_digit());
            let cap = t.chars().next().is_some_and(|c| c.is_ascii_uppercase());
            let first_person = ["I", "I'm", "I've", "I'd", "I'll"].contains(&t.as_str());
            digit || (cap && !initial && !first_person)
        })
        .count()
}

pub fn bf_descriptive(text: &str) -> usize {
    let lexicon: Vec<&str> =
        DESCRIPTIVE.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    bf_tokens(text).iter().filter(|(t, _)| lexicon.contains(&t.to_lowercase().as_str())).count()
}

pub fn bf_greeting(text: &str, turn_index: u32) -> bool {
    let lower: String = text.to_lowercase();
    let phrases =
        ["hello", "hi", "hey", "good morning", "good afternoon", "good evening", "howdy", "what's up"];
    turn_index <= 1
        && phrases.iter().any(|p| {
            lower.len() >= p.len()
                && &lower[..p.len()] == *p
                && lower[p.len()..].chars().next().is_none_or(|c| !c.is_alphanumeric() && c != '\'')
        })
}

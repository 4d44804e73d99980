//! Metric equivalence on the hand-labelled 50-utterance corpus.
//!
//! Every measure is checked three ways: the hand label in the fixture, a
//! brute-force recomputation written here from the definitions, and the
//! library.

use std::collections::BTreeMap;

use talktrainer_core::analytics::{
    detect_greeting, eye_contact_rate, initiation_rate, metrics_from_records, turn_metrics,
};
use talktrainer_core::engine::ConversationRecord;
use talktrainer_core::observer::Observer;
use talktrainer_core::storage::{EventRecord, TranscriptStore};
use talktrainer_core::Speaker;

#[path = "oracles/corpus.rs"]
mod oracles;
use oracles::*;

#[test]
fn corpus_has_fifty_utterances() {
    let n: usize = corpus().conversations.iter().map(|c| c.utterances.len()).sum();
    assert_eq!(n, 50);
}

#[test]
fn brevity_matches() {
    let obs = Observer::default();
    for c in corpus().conversations {
        for u in c.utterances {
            let s = obs.brevity_score(&u.text);
            assert_eq!(bf_words(&u.text), u.labels.words, "{}", u.text);
            assert_eq!(s.value as usize, u.labels.words, "{}", u.text);
            let expect = (1..=30).contains(&u.labels.words);
            assert_eq!(s.passed, expect, "{}", u.text);
        }
    }
}

#[test]
fn specificity_matches() {
    let obs = Observer::default();
    for c in corpus().conversations {
        for u in c.utterances {
            let b = obs.specificity_breakdown(&u.text);
            assert_eq!(bf_entities(&u.text), u.labels.entities, "{}", u.text);
            assert_eq!(b.entities.len(), u.labels.entities, "{}", u.text);
            assert_eq!(bf_descriptive(&u.text), u.labels.descriptive, "{}", u.text);
            assert_eq!(b.descriptive_hits, u.labels.descriptive, "{}", u.text);
            let density = u.labels.descriptive as f64 / u.labels.words as f64;
            assert_eq!(b.density, density);
            let pass = u.labels.entities <= 2 && density <= 0.25;
            assert_eq!(obs.specificity_score(&u.text).passed, pass, "{}", u.text);
        }
    }
}

#[test]
fn greetings_match() {
    let mut flips = 0;
    for c in corpus().conversations {
        for u in c.utterances {
            assert_eq!(bf_greeting(&u.text, u.turn_index), u.labels.greeting, "{}", u.text);
            assert_eq!(detect_greeting(&u.text, u.turn_index), u.labels.greeting, "{}", u.text);
            // Moving a detected greeting past the first turn must flip it.
            if u.labels.greeting {
                assert!(!detect_greeting(&u.text, u.turn_index + 2));
                flips += 1;
            }
        }
    }
    assert_eq!(flips, 9);
}

#[test]
fn initiation_matches() {
    let corpus = corpus();
    let mut by_session: BTreeMap<&str, Vec<&Conv>> = BTreeMap::new();
    for c in &corpus.conversations {
        by_session.entry(&c.session_id).or_default().push(c);
    }
    let expected = [("session-0000", 0.5), ("session-0001", 2.0 / 3.0)];
    for (session, rate) in expected {
        let convs = &by_session[session];
        let bf = convs.iter().filter(|c| c.utterances[0].speaker == Speaker::User).count() as f64
            / convs.len() as f64;
        let records: Vec<ConversationRecord> = convs.iter().map(|c| record(c)).collect();
        assert_eq!(bf, rate);
        assert_eq!(initiation_rate(&records).unwrap(), rate);
    }
}

#[test]
fn balance_and_gaps_match() {
    for c in corpus().conversations {
        let t = turn_metrics(&record(&c)).unwrap();
        let u = &c.utterances;
        for i in 1..u.len() {
            let prev = (u[i - 1].end_ms - u[i - 1].start_ms) as f64 / 1000.0;
            let cur = (u[i].end_ms - u[i].start_ms) as f64 / 1000.0;
            let gap = ((u[i].start_ms - u[i - 1].end_ms) as f64 / 1000.0).max(0.0);
            assert!((t.balances[i - 1].unwrap() - cur / prev).abs() < 1e-9);
            assert!((t.gaps_s[i - 1] - gap).abs() < 1e-9);
            assert!((t.durations_s[i] - cur).abs() < 1e-9);
        }
        assert_eq!(t.balances.len(), u.len() - 1);
    }
}

#[test]
fn eye_contact_matches() {
    for c in corpus().conversations {
        let labelled: Vec<bool> = c.utterances.iter().filter_map(|u| u.eye_contact).collect();
        let bf = labelled.iter().filter(|b| **b).count() as f64 / labelled.len() as f64;
        assert_eq!(eye_contact_rate(&record(&c)).unwrap(), bf);
    }
}

#[test]
fn session_metrics_from_transcripts_match() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = TranscriptStore::open(dir.path()).unwrap();
    let corpus = corpus();
    for c in &corpus.conversations {
        for u in &c.utterances {
            let mut r = EventRecord::utterance(
                u.start_ms,
                c.session_id.clone(),
                c.conversation_id.clone(),
                u.turn_index,
                u.speaker,
                u.text.clone(),
                u.end_ms - u.start_ms,
            );
            r.eye_contact = u.eye_contact;
            store.append_event(&r).unwrap();
        }
    }
    let records = store.read_all().unwrap().records;
    let metrics = metrics_from_records(&records);
    assert_eq!(metrics.len(), 2);
    for m in &metrics {
        let convs: Vec<&Conv> = corpus
            .conversations
            .iter()
            .filter(|c| c.session_id == format!("session-{:04}", m.session_index))
            .collect();
        let mut user_turns = Vec::new();
        let mut gaps = Vec::new();
        let mut balances = Vec::new();
        let mut eye = (0, 0);
        for c in &convs {
            let u = &c.utterances;
            for i in 0..u.len() {
                let d = (u[i].end_ms - u[i].start_ms) as f64 / 1000.0;
                if u[i].speaker == Speaker::User {
                    user_turns.push(d);
                    if i > 0 && u[i - 1].speaker == Speaker::Robot {
                        balances.push(d / ((u[i - 1].end_ms - u[i - 1].start_ms) as f64 / 1000.0));
                    }
                }
                if i > 0 {
                    gaps.push(((u[i].start_ms - u[i - 1].end_ms) as f64 / 1000.0).max(0.0));
                }
                if let Some(e) = u[i].eye_contact {
                    eye.1 += 1;
                    if e {
                        eye.0 += 1;
                    }
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((m.mean_user_turn_s - mean(&user_turns)).abs() < 1e-9);
        assert!((m.mean_inter_turn_s - mean(&gaps)).abs() < 1e-9);
        assert!((m.mean_balance - mean(&balances)).abs() < 1e-9);
        assert_eq!(m.eye_contact_rate, Some(eye.0 as f64 / eye.1 as f64));
        let init =
            convs.iter().filter(|c| c.initiated_by == Speaker::User).count() as f64 / convs.len() as f64;
        assert_eq!(m.initiation_rate, init);
    }
}

use std::sync::Arc;

use super::*;
use crate::observer::Observer;
use crate::speakers::SimulatedRobot;

fn engine(seed: u64) -> Engine {
    Engine::new(
        Arc::new(Observer::default()),
        Box::new(SimulatedRobot::new(seed)),
        EngineConfig { seed, ..EngineConfig::default() },
    )
}

fn records(actions: &[Action]) -> Vec<&EventRecord> {
    actions
        .iter()
        .filter_map(|a| match a {
            Action::Emit(r) => Some(r),
            _ => None,
        })
        .collect()
}

const FINE: &str = "That sounds nice, how was the rest of your day?";

/// Feeds user replies until the engine leaves `Conversing`.
fn converse(e: &mut Engine, now: &mut i64, all: &mut Vec<Action>, text: &str) -> usize {
    let mut n = 0;
    while e.phase() == Phase::Conversing {
        *now += 5_000;
        all.extend(e.handle_event(*now, Event::user(text)).unwrap());
        n += 1;
        assert!(n <= 20, "conversation did not end");
    }
    n
}

fn start_session(e: &mut Engine, now: &mut i64) -> Vec<Action> {
    let mut all = e.handle_event(*now, Event::WakeDue).unwrap();
    all.extend(e.handle_event(*now, Event::RoundComplete).unwrap());
    assert_eq!(e.phase(), Phase::AwaitUserGreeting);
    all
}

#[test]
fn round_count_is_uniform_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut seen = [0u32; 13];
    for _ in 0..5000 {
        seen[sample_round_count(&mut rng) as usize] += 1;
    }
    for (r, n) in seen.iter().enumerate() {
        if (8..=12).contains(&r) {
            assert!((900..1100).contains(n), "{r}: {n}");
        } else {
            assert_eq!(*n, 0);
        }
    }
}

#[test]
fn demonstration_tie_goes_to_latest() {
    let counts = ViolationCounts::from_pairs(&[(Criterion::Tone, 3), (Criterion::Brevity, 3)]);
    let hist = [
        Criterion::Brevity,
        Criterion::Tone,
        Criterion::Tone,
        Criterion::Brevity,
        Criterion::Tone,
        Criterion::Brevity,
    ];
    assert_eq!(should_demonstrate(&counts, &hist, 3), Some(Criterion::Brevity));
    let counts = ViolationCounts::from_pairs(&[(Criterion::Tone, 4), (Criterion::Brevity, 3)]);
    assert_eq!(should_demonstrate(&counts, &hist, 3), Some(Criterion::Tone));
    let few = ViolationCounts::from_pairs(&[(Criterion::Tone, 2)]);
    assert_eq!(should_demonstrate(&few, &hist, 3), None);
}

#[test]
fn user_initiated_conversation_runs_budget() {
    let mut e = engine(1);
    let mut now = 0;
    let mut all = start_session(&mut e, &mut now);
    all.extend(e.handle_event(1_000, Event::user("Hi! How are you?")).unwrap());
    assert_eq!(e.phase(), Phase::Conversing);
    let conv = e.state().conversation.clone().unwrap();
    assert_eq!(conv.initiated_by, Speaker::User);
    assert_eq!(conv.greeting_utterances, 2);
    assert!((MIN_ROUNDS..=MAX_ROUNDS).contains(&conv.round_budget));
    assert_eq!(e.state().rounds_remaining, conv.round_budget);

    now = 1_000;
    let replies = converse(&mut e, &mut now, &mut all, FINE);
    assert_eq!(replies as u32, conv.round_budget);
    assert_eq!(e.phase(), Phase::FeedbackMicro);

    let done = &e.session_conversations()[0];
    let post = done.post_greeting();
    let robot = post.iter().filter(|u| u.speaker == Speaker::Robot).count();
    assert_eq!(robot as u32, done.round_budget);
    assert_eq!(post.len() as u32, 2 * done.round_budget);
    assert!(all.contains(&Action::Lifecycle(Lifecycle::ConversationCompleted)));
}

#[test]
fn robot_initiated_after_wait() {
    let mut e = engine(2);
    let mut now = 0;
    let all = start_session(&mut e, &mut now);
    let timer = all.iter().find_map(|a| match a {
        Action::StartTimer { timer, after_ms } => Some((*timer, *after_ms)),
        _ => None,
    });
    assert_eq!(timer, Some((TimerKind::InitiationWait, 5_000)));

    let acts = e.handle_event(5_000, Event::WaitTimeout).unwrap();
    let greet = records(&acts).into_iter().find(|r| r.event_type == EventType::RobotUtterance).unwrap();
    assert_eq!(greet.text.as_deref(), Some("Hi! How's your day going?"));
    assert_eq!(e.phase(), Phase::AwaitUserGreeting);

    e.handle_event(9_000, Event::user("Good, thanks!")).unwrap();
    let conv = e.state().conversation.clone().unwrap();
    assert_eq!(conv.initiated_by, Speaker::Robot);
    assert_eq!(conv.greeting_utterances, 2);
    // Robot opens round one right after the greeting exchange.
    assert_eq!(conv.utterances.last().unwrap().speaker, Speaker::Robot);

    let mut all = Vec::new();
    now = 9_000;
    let replies = converse(&mut e, &mut now, &mut all, FINE);
    assert_eq!(replies as u32, conv.round_budget);
    let done = &e.session_conversations()[0];
    assert_eq!(done.utterances.last().unwrap().speaker, Speaker::User);
}

#[test]
fn unanswered_greeting_reprompts_then_abandons() {
    let mut e = engine(3);
    let mut now = 0;
    start_session(&mut e, &mut now);
    e.handle_event(5_000, Event::WaitTimeout).unwrap();
    let acts = e.handle_event(25_000, Event::RepromptTimeout).unwrap();
    let second = records(&acts)[0].text.clone().unwrap();
    assert_eq!(second, "Hello again! I'd love to hear how things are going.");
    let acts = e.handle_event(45_000, Event::RepromptTimeout).unwrap();
    assert!(acts.contains(&Action::Lifecycle(Lifecycle::ConversationAbandoned)));
    assert_eq!(e.phase(), Phase::Idle);
    assert!(e.state().conversation.is_none());
}

#[test]
fn illegal_events_leave_state_untouched() {
    let mut e = engine(4);
    let before = e.state().clone();
    for ev in [Event::user("hi"), Event::RoundComplete, Event::WaitTimeout, Event::RepromptTimeout] {
        let err = e.handle_event(1, ev).unwrap_err();
        assert!(matches!(err, EngineError::IllegalEvent { phase: Phase::Idle, .. }));
        assert_eq!(e.state(), &before);
    }
    let mut now = 0;
    start_session(&mut e, &mut now);
    assert!(e.handle_event(2, Event::user("  ")).is_err());
    assert!(e.handle_event(2, Event::WakeDue).is_err());
}

#[test]
fn verbose_user_gets_demonstration() {
    let mut e = engine(5);
    let mut now = 0;
    start_session(&mut e, &mut now);
    e.handle_event(1_000, Event::user("Hi!")).unwrap();
    let long = ["and then we walked"; 10].join(" ");
    let mut all = Vec::new();
    now = 1_000;
    converse(&mut e, &mut now, &mut all, &long);
    let conv = &e.session_conversations()[0];
    assert_eq!(conv.violations.get(Criterion::Brevity), conv.round_budget);

    let micro = records(&all).into_iter().find(|r| r.event_type == EventType::FeedbackMicro).unwrap().clone();
    // Repeating the same text also trips coherence; the target is a most
    // violated criterion either way.
    let target = Criterion::parse(micro.extra("improvements").unwrap()).unwrap();
    assert_eq!(conv.violations.get(target), conv.round_budget);

    let acts = e.handle_event(now, Event::RoundComplete).unwrap();
    assert_eq!(e.phase(), Phase::Demonstration);
    let lines: Vec<_> =
        records(&acts).into_iter().filter(|r| r.event_type == EventType::DemonstrationLine).collect();
    assert_eq!(lines.len(), 6);
    e.handle_event(now, Event::RoundComplete).unwrap();
    assert_eq!(e.phase(), Phase::Idle);
}

#[test]
fn feedback_phases_use_blue_indicator() {
    let mut e = engine(6);
    let mut now = 0;
    let mut all = start_session(&mut e, &mut now);
    all.extend(e.handle_event(1_000, Event::user("Hi!")).unwrap());
    now = 1_000;
    converse(&mut e, &mut now, &mut all, FINE);
    for r in records(&all) {
        if r.event_type == EventType::StateChange {
            let blue = r.extra("indicator") == Some("feedback_blue");
            let to_feedback =
                matches!(r.extra("to"), Some("FeedbackMicro" | "FeedbackMacro" | "Demonstration"));
            assert_eq!(blue, to_feedback);
            assert_eq!(r.extra("voice") == Some("formal"), to_feedback);
        }
    }
}

#[test]
fn window_end_during_conversation_defers_macro() {
    let mut e = engine(7);
    let mut now = 0;
    start_session(&mut e, &mut now);
    e.handle_event(1_000, Event::user("Hi!")).unwrap();
    e.handle_event(2_000, Event::WindowEnding).unwrap();
    assert_eq!(e.phase(), Phase::Conversing);
    let mut all = Vec::new();
    now = 2_000;
    converse(&mut e, &mut now, &mut all, FINE);
    e.handle_event(now, Event::RoundComplete).unwrap();
    assert_eq!(e.phase(), Phase::FeedbackMacro);
    assert!(e.handle_event(now, Event::WindowEnding).is_err());
    let acts = e.handle_event(now, Event::RoundComplete).unwrap();
    assert!(acts.contains(&Action::Lifecycle(Lifecycle::SessionCompleted)));
    assert_eq!(e.phase(), Phase::Idle);
    assert_eq!(e.state().session_index, 1);
    assert_eq!(e.session_id(), "session-0001");
}

#[test]
fn window_end_without_conversations_closes_silently() {
    let mut e = engine(8);
    let mut now = 0;
    start_session(&mut e, &mut now);
    let acts = e.handle_event(1_000, Event::WindowEnding).unwrap();
    assert!(records(&acts).iter().all(|r| r.event_type != EventType::FeedbackMacro));
    assert_eq!(e.phase(), Phase::Idle);
    assert_eq!(e.state().session_index, 1);
    // Nothing started yet: ignored.
    let acts = e.handle_event(2_000, Event::WindowEnding).unwrap();
    assert!(acts.is_empty());
    assert_eq!(e.state().session_index, 1);
}

#[test]
fn initiation_wait_grows_with_session() {
    let mut e = engine(9).starting_at(1);
    let mut now = 0;
    let acts = start_session(&mut e, &mut now);
    let after = acts.iter().find_map(|a| match a {
        Action::StartTimer { after_ms, .. } => Some(*after_ms),
        _ => None,
    });
    assert_eq!(after, Some(8_466));
}

#[test]
fn records_are_time_ordered_and_valid() {
    let mut e = engine(10);
    let mut now = 0;
    let mut all = start_session(&mut e, &mut now);
    all.extend(e.handle_event(1_000, Event::user("Hi!")).unwrap());
    now = 1_000;
    converse(&mut e, &mut now, &mut all, FINE);
    let recs = records(&all);
    for w in recs.windows(2) {
        assert!(w[0].ts_ms <= w[1].ts_ms);
    }
    for r in recs {
        r.validate().unwrap();
    }
}

#[test]
fn restore_resumes_open_session() {
    let mut e = engine(11);
    let mut now = 0;
    let mut all = start_session(&mut e, &mut now);
    all.extend(e.handle_event(1_000, Event::user("Hi!")).unwrap());
    now = 1_000;
    converse(&mut e, &mut now, &mut all, FINE);
    all.extend(e.handle_event(now, Event::RoundComplete).unwrap());
    // A second conversation in flight when the process dies.
    all.extend(e.handle_event(now, Event::WakeDue).unwrap());
    all.extend(e.handle_event(now, Event::RoundComplete).unwrap());
    all.extend(e.handle_event(now + 1_000, Event::user("Hello!")).unwrap());
    let recs: Vec<EventRecord> = records(&all).into_iter().cloned().collect();

    let r = engine(11).restore(&recs);
    assert_eq!(r.phase(), Phase::Idle);
    assert_eq!(r.state().session_index, 0);
    assert_eq!(r.session_conversations().len(), 1);
    let orig = &e.session_conversations()[0];
    let back = &r.session_conversations()[0];
    assert_eq!(back.id, orig.id);
    assert_eq!(back.round_budget, orig.round_budget);
    assert_eq!(back.utterances.len(), orig.utterances.len());
    assert_eq!(back.greeting_utterances, orig.greeting_utterances);
}

#[test]
fn restore_after_closed_session_moves_on() {
    let mut e = engine(12);
    let mut now = 0;
    let mut all = start_session(&mut e, &mut now);
    all.extend(e.handle_event(1_000, Event::WindowEnding).unwrap());
    let recs: Vec<EventRecord> = records(&all).into_iter().cloned().collect();
    let r = engine(12).restore(&recs);
    assert_eq!(r.state().session_index, 1);
    assert!(r.session_conversations().is_empty());
}

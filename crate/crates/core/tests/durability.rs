//! Crash recovery and the health watchdog's fault flags.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDate;
use talktrainer_core::analytics::{daily_health_report, HealthReport};
use talktrainer_core::engine::{session_index_of, Engine, EngineConfig, Phase};
use talktrainer_core::observer::Observer;
use talktrainer_core::scheduler::TrainingWindow;
use talktrainer_core::sim::{read_records, run_simulation, SimConfig};
use talktrainer_core::speakers::{SimulatedRobot, StaticProbe};
use talktrainer_core::storage::{EventRecord, EventType, TrainingConfig, TranscriptStore};

fn last_file(dir: &Path) -> std::path::PathBuf {
    let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.pop().unwrap()
}

fn engine() -> Engine {
    Engine::new(Arc::new(Observer::default()), Box::new(SimulatedRobot::new(1)), EngineConfig::default())
}

#[test]
fn torn_line_costs_only_itself() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = TranscriptStore::open(dir.path()).unwrap();
    let t0 = 1_760_000_000_000;
    for i in 0..20 {
        store.append_event(&EventRecord::new(t0 + i, "session-0000", EventType::StateChange)).unwrap();
    }
    drop(store);
    let path = last_file(&dir.path().join("transcripts"));
    let mut f = OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(br#"{"ts_ms":1760000000020,"session_id":"sess"#).unwrap();
    drop(f);

    let mut store = TranscriptStore::open(dir.path()).unwrap();
    store.append_event(&EventRecord::new(t0 + 30, "session-0000", EventType::Wake)).unwrap();
    let back = store.read_all().unwrap();
    assert_eq!(back.records.len(), 21);
    assert_eq!(back.corrupt_lines, 1);
    assert_eq!(back.records.last().unwrap().event_type, EventType::Wake);
}

#[test]
fn restart_replays_mid_session() {
    let src = tempfile::tempdir().unwrap();
    run_simulation(&SimConfig::new(2, "improving", 4).unwrap(), src.path()).unwrap();
    let all = read_records(src.path()).unwrap();

    // Cut the second session just after its third conversation's feedback.
    let cut = all
        .iter()
        .enumerate()
        .filter(|(_, r)| r.event_type == EventType::FeedbackMicro && r.session_id == "session-0001")
        .nth(2)
        .map(|(i, _)| i + 1)
        .unwrap();
    let dst = tempfile::tempdir().unwrap();
    let mut store = TranscriptStore::open(dst.path()).unwrap();
    for r in &all[..cut] {
        store.append_event(r).unwrap();
    }
    drop(store);
    // The in-flight line was half written when the process died.
    let path = last_file(&dst.path().join("transcripts"));
    let mut f = OpenOptions::new().append(true).open(&path).unwrap();
    let next = serde_json::to_string(&all[cut]).unwrap();
    f.write_all(&next.as_bytes()[..next.len() / 2]).unwrap();
    drop(f);

    let report = TranscriptStore::open(dst.path()).unwrap().read_all().unwrap();
    assert_eq!(report.records, all[..cut]);
    assert_eq!(report.corrupt_lines, 1);

    let e = engine().restore(&report.records);
    assert_eq!(e.phase(), Phase::Idle);
    assert_eq!(e.state().session_index, 1);
    assert_eq!(e.session_conversations().len(), 3);
    assert_eq!(e.clock_ms(), all[cut - 1].ts_ms);
    for c in e.session_conversations() {
        assert_eq!(session_index_of(&c.session_id), Some(1));
        assert!(c.utterances.len() >= 2 * c.round_budget as usize);
    }

    // A closed session restores to the next index.
    let first_closed = all.iter().position(|r| r.session_id == "session-0001").unwrap();
    let e = engine().restore(&all[..first_closed]);
    assert_eq!(e.state().session_index, 1);
    assert!(e.session_conversations().is_empty());
}

fn valid_config() -> TrainingConfig {
    let t = |s: &str| chrono::NaiveTime::parse_from_str(s, "%H:%M").unwrap();
    TrainingConfig { windows: vec![TrainingWindow::new(t("09:00"), t("12:00"))], ..TrainingConfig::default() }
}

fn report(storage_fault: bool, speaker_up: bool) -> HealthReport {
    let dir = tempfile::tempdir().unwrap();
    let mut store = TranscriptStore::open(dir.path()).unwrap();
    let ts = 1_760_000_000_000;
    store.append_event(&EventRecord::new(ts, "session-0000", EventType::Wake)).unwrap();
    let date = chrono::DateTime::from_timestamp_millis(ts).unwrap().date_naive();
    if storage_fault {
        // Swap the transcript directory for a plain file.
        let t = store.transcript_dir().to_owned();
        fs::remove_dir_all(&t).unwrap();
        fs::write(&t, b"x").unwrap();
    }
    daily_health_report(&store, &StaticProbe(speaker_up), &valid_config(), date)
}

#[test]
fn health_flags_each_fault_alone() {
    for storage_fault in [false, true] {
        for speaker_up in [false, true] {
            let r = report(storage_fault, speaker_up);
            assert_eq!(r.storage_writable, !storage_fault);
            assert_eq!(r.files_ok, !storage_fault);
            assert_eq!(r.speaker_reachable, speaker_up);
            assert!(r.config_valid);
            assert_eq!(r.all_ok(), !storage_fault && speaker_up);
        }
    }
    let r = report(false, true);
    assert_eq!(r.greetings_delivered, 1);
    assert_eq!(r.date, NaiveDate::from_ymd_opt(2025, 10, 9).unwrap());
}

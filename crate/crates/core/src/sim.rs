//! Accelerated studies: the real engine, scheduler and store driven by a
//! simulated trainee on a virtual clock.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{metrics_from_records, study_trend, RegressionResult, SessionMetrics, TrendMetric};
use crate::engine::{initiation_wait, Action, Engine, EngineConfig, Event, Phase};
use crate::observer::{DialogueContext, Observer};
use crate::presence::GateDecision;
use crate::scheduler::{ScheduleAction, Scheduler};
use crate::speakers::{user_agent_respond, SimulatedRobot, UserAgentProfile};
use crate::storage::{Durability, EventRecord, StorageError, TranscriptStore};

/// Monday 2025-01-06 00:00 UTC. Fixed so repeated runs write identical files.
pub const SIM_EPOCH_MS: i64 = 1_736_121_600_000;
const DAY_MS: i64 = 86_400_000;
const WINDOW_START_OFFSET_MS: i64 = 9 * 3_600_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown profile {0:?}")]
    UnknownProfile(String),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("engine rejected an event: {0}")]
    Engine(#[from] crate::engine::EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sessions: u32,
    pub profile: UserAgentProfile,
    pub seed: u64,
    pub target_conversations: u32,
    pub window_hours: f64,
    /// Chance that a due conversation is gated off by company in the room.
    pub skip_probability: f64,
}

impl SimConfig {
    pub fn new(sessions: u32, profile: &str, seed: u64) -> Result<Self, SimError> {
        let profile = UserAgentProfile::builtin(profile, seed)
            .ok_or_else(|| SimError::UnknownProfile(profile.to_owned()))?;
        Ok(Self {
            sessions,
            profile,
            seed,
            target_conversations: crate::scheduler::DEFAULT_TARGET_CONVERSATIONS,
            window_hours: crate::scheduler::DEFAULT_MAX_WINDOW_HOURS,
            skip_probability: 0.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub transcript_dir: PathBuf,
    pub records: usize,
    pub sessions: Vec<SessionMetrics>,
    pub initiation_trend: Option<RegressionResult>,
    pub eye_contact_trend: Option<RegressionResult>,
}

impl SimReport {
    pub fn first_rate(&self) -> Option<f64> {
        self.sessions.first().map(|s| s.initiation_rate)
    }

    pub fn final_rate(&self) -> Option<f64> {
        self.sessions.last().map(|s| s.initiation_rate)
    }
}

struct Driver {
    engine: Engine,
    store: TranscriptStore,
    profile: UserAgentProfile,
    rng: ChaCha8Rng,
    user_turn: u32,
    records: usize,
}

impl Driver {
    fn apply(&mut self, now: i64, event: Event) -> Result<Vec<Action>, SimError> {
        let actions = self.engine.handle_event(now, event)?;
        for a in &actions {
            if let Action::Emit(r) = a {
                self.store.append_event(r)?;
                self.records += 1;
            }
        }
        Ok(actions)
    }

    fn context(&self) -> DialogueContext {
        let mut ctx = DialogueContext::new();
        if let Some(c) = &self.engine.state().conversation {
            for u in &c.utterances {
                ctx.push(u.speaker, u.text.clone());
            }
        }
        ctx
    }

    fn user_says(&mut self, at: i64) -> Result<(), SimError> {
        let session = self.engine.state().session_index;
        let reply = user_agent_respond(&self.profile, session, self.user_turn, &self.context());
        self.user_turn += 1;
        self.apply(
            at,
            Event::UserUtterance {
                text: reply.text,
                eye_contact: Some(reply.eye_contact),
                duration_ms: None,
            },
        )?;
        Ok(())
    }

    fn pause(&mut self) -> i64 {
        self.rng.random_range(400..1_800)
    }

    /// Drains output phases until the engine is idle again.
    fn settle(&mut self) -> Result<(), SimError> {
        while matches!(
            self.engine.phase(),
            Phase::FeedbackMicro | Phase::Demonstration | Phase::FeedbackMacro
        ) {
            let now = self.engine.clock_ms();
            self.apply(now, Event::RoundComplete)?;
        }
        Ok(())
    }

    fn run_conversation(&mut self, now: i64) -> Result<(), SimError> {
        self.apply(now, Event::WakeDue)?;
        let t = self.engine.clock_ms();
        self.apply(t, Event::RoundComplete)?;

        let session = self.engine.state().session_index;
        let opener = user_agent_respond(&self.profile, session, self.user_turn, &DialogueContext::new());
        let wait_ms = (initiation_wait(session, &EngineConfig::default().fading) * 1000.0) as i64;
        let t = self.engine.clock_ms();
        if opener.initiates {
            let delay = self.rng.random_range(500..(wait_ms * 4 / 5).max(501));
            self.user_says(t + delay)?;
        } else {
            self.apply(t + wait_ms, Event::WaitTimeout)?;
            let t = self.engine.clock_ms() + self.pause();
            self.user_says(t)?;
        }
        while self.engine.phase() == Phase::Conversing {
            let t = self.engine.clock_ms() + self.pause();
            self.user_says(t)?;
        }
        self.settle()
    }
}

/// Runs `config.sessions` daily windows back to back and analyzes the result.
/// Transcripts land in `<out>/transcripts`.
pub fn run_simulation(config: &SimConfig, out: &Path) -> Result<SimReport, SimError> {
    let store = TranscriptStore::open(out)?.with_durability(Durability::Flush);
    let engine = Engine::new(
        Arc::new(Observer::default()),
        Box::new(SimulatedRobot::new(config.seed)),
        EngineConfig { seed: config.seed, ..EngineConfig::default() },
    );
    let mut d = Driver {
        engine,
        store,
        profile: config.profile.clone(),
        rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x51A7_0000),
        user_turn: 0,
        records: 0,
    };
    let window_ms = (config.window_hours * 3_600_000.0) as i64;

    for day in 0..config.sessions {
        d.user_turn = 0;
        let start = SIM_EPOCH_MS + i64::from(day) * DAY_MS + WINDOW_START_OFFSET_MS;
        let end = start + window_ms;
        let mut sched =
            Scheduler::new(start, end, config.target_conversations, config.seed.wrapping_add(u64::from(day)));
        loop {
            let now = sched.state().next_due_ms.max(d.engine.clock_ms());
            let gate = if d.rng.random_bool(config.skip_probability.clamp(0.0, 1.0)) {
                GateDecision::Skip
            } else {
                GateDecision::Engage
            };
            match sched.tick(now, gate) {
                Some(ScheduleAction::StartConversation) => {
                    d.run_conversation(now)?;
                    let _ = sched.on_conversation_complete(d.engine.clock_ms());
                }
                Some(ScheduleAction::Skip) => {}
                Some(ScheduleAction::EndWindowFeedback) | None => {
                    let t = d.engine.clock_ms().max(now);
                    d.apply(t, Event::WindowEnding)?;
                    d.settle()?;
                    break;
                }
            }
        }
    }

    let report = d.store.read_all()?;
    let sessions = metrics_from_records(&report.records);
    Ok(SimReport {
        transcript_dir: d.store.transcript_dir().to_owned(),
        records: d.records,
        initiation_trend: study_trend(&sessions, TrendMetric::InitiationRate).ok(),
        eye_contact_trend: study_trend(&sessions, TrendMetric::EyeContactRate).ok(),
        sessions,
    })
}

/// Every record in a simulation output, for audits.
pub fn read_records(out: &Path) -> Result<Vec<EventRecord>, SimError> {
    Ok(TranscriptStore::open(out)?.read_all()?.records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = SimConfig::new(2, "improving", 3).unwrap();
        run_simulation(&cfg, a.path()).unwrap();
        run_simulation(&cfg, b.path()).unwrap();
        let read = |p: &Path| {
            let mut files: Vec<_> =
                std::fs::read_dir(p.join("transcripts")).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(read(a.path()), read(b.path()));
        assert!(!read(a.path()).is_empty());
    }

    #[test]
    fn sessions_reach_target() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SimConfig::new(1, "static", 11).unwrap();
        let report = run_simulation(&cfg, dir.path()).unwrap();
        let records = read_records(dir.path()).unwrap();
        let micro =
            records.iter().filter(|r| r.event_type == crate::storage::EventType::FeedbackMicro).count();
        let macro_ =
            records.iter().filter(|r| r.event_type == crate::storage::EventType::FeedbackMacro).count();
        assert_eq!(micro as u32, cfg.target_conversations);
        assert_eq!(macro_, 1);
        assert_eq!(report.sessions.len(), 1);
    }

    #[test]
    fn unknown_profile() {
        assert!(matches!(SimConfig::new(1, "nope", 0), Err(SimError::UnknownProfile(_))));
    }
}

//! The engine thread. Every mutation arrives through one queue; timers,
//! output pacing, the scheduler and HTTP requests all post to it.

use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, RwLock};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use chrono::{Datelike, Local, NaiveDate, TimeZone};
use serde::Serialize;
use talktrainer_core::engine::{Action, Engine, EngineState, Event, Lifecycle, Phase, TimerKind};
use talktrainer_core::presence::{gate_decision, GateDecision, PresenceDetector};
use talktrainer_core::scheduler::{ScheduleAction, ScheduleState, Scheduler, TrainingWindow};
use talktrainer_core::storage::{EventRecord, EventType, TranscriptStore};

use crate::bus::EventBus;

pub enum Command {
    Event(Event),
    Shutdown,
}

/// What `/state` serves.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    #[serde(flatten)]
    pub state: EngineState,
    pub session_id: String,
    pub indicator: &'static str,
    pub conversations_completed: usize,
    pub window_ending: bool,
    pub clock_ms: i64,
    pub schedule: Option<ScheduleState>,
    pub storage_ok: bool,
}

impl Snapshot {
    fn of(engine: &Engine, schedule: Option<&Scheduler>, storage_ok: bool) -> Self {
        Self {
            state: engine.state().clone(),
            session_id: engine.session_id(),
            indicator: engine.phase().indicator().as_str(),
            conversations_completed: engine.session_conversations().len(),
            window_ending: engine.window_ending(),
            clock_ms: engine.clock_ms(),
            schedule: schedule.map(|s| s.state().clone()),
            storage_ok,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunnerOptions {
    /// Multiplies every real-time delay: output pacing and engine timers.
    pub time_scale: f64,
    /// Daily windows. Empty means conversations start only on request.
    pub windows: Vec<TrainingWindow>,
    pub target_conversations: u32,
    pub seed: u64,
    /// How often the scheduler is consulted.
    pub tick: Duration,
}

impl Default for RunnerOptions {
    fn default() -> Self {
        Self {
            time_scale: 1.0,
            windows: Vec::new(),
            target_conversations: talktrainer_core::scheduler::DEFAULT_TARGET_CONVERSATIONS,
            seed: 0,
            tick: Duration::from_millis(250),
        }
    }
}

/// Cloneable access to a running engine thread.
#[derive(Clone)]
pub struct RunnerHandle {
    tx: Sender<Command>,
    pub snapshot: Arc<RwLock<Snapshot>>,
    pub bus: Arc<EventBus>,
}

impl RunnerHandle {
    /// Queues an event. False when the engine thread is gone.
    pub fn post(&self, event: Event) -> bool {
        self.tx.send(Command::Event(event)).is_ok()
    }

    pub fn snapshot(&self) -> Snapshot {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    pub fn shutdown(&self) {
        let _ = self.tx.send(Command::Shutdown);
    }
}

struct ActiveWindow {
    date: NaiveDate,
    index: usize,
    scheduler: Scheduler,
}

struct Runner {
    engine: Engine,
    store: TranscriptStore,
    detector: Box<dyn PresenceDetector>,
    options: RunnerOptions,
    bus: Arc<EventBus>,
    snapshot: Arc<RwLock<Snapshot>>,
    timers: Vec<(Instant, TimerKind)>,
    round_due: Option<Instant>,
    window: Option<ActiveWindow>,
    /// Windows already run, so a restart inside a finished window stays quiet.
    done: Vec<(NaiveDate, usize)>,
    last_ts: i64,
    storage_ok: bool,
}

fn now_ms() -> i64 {
    chrono::Utc::now().timestamp_millis()
}

/// Starts the engine thread. `engine` should already be restored from the
/// store's transcripts.
pub fn spawn(
    engine: Engine,
    store: TranscriptStore,
    detector: Box<dyn PresenceDetector>,
    options: RunnerOptions,
) -> (RunnerHandle, JoinHandle<()>) {
    let (tx, rx) = mpsc::channel();
    let bus = Arc::new(EventBus::new());
    let snapshot = Arc::new(RwLock::new(Snapshot::of(&engine, None, true)));
    let last_ts = engine.clock_ms();
    let runner = Runner {
        engine,
        store,
        detector,
        options,
        bus: bus.clone(),
        snapshot: snapshot.clone(),
        timers: Vec::new(),
        round_due: None,
        window: None,
        done: Vec::new(),
        last_ts,
        storage_ok: true,
    };
    let join = thread::Builder::new()
        .name("engine".into())
        .spawn(move || runner.run(rx))
        .expect("spawn engine thread");
    (RunnerHandle { tx, snapshot, bus }, join)
}

impl Runner {
    fn run(mut self, rx: Receiver<Command>) {
        loop {
            let wait = self.next_deadline().saturating_duration_since(Instant::now());
            match rx.recv_timeout(wait) {
                Ok(Command::Event(e)) => self.dispatch(e),
                Ok(Command::Shutdown) | Err(RecvTimeoutError::Disconnected) => break,
                Err(RecvTimeoutError::Timeout) => {}
            }
            self.fire_due();
            self.schedule_tick();
        }
        log::info!("engine thread stopped");
    }

    fn next_deadline(&self) -> Instant {
        let mut d = Instant::now() + self.options.tick;
        for (t, _) in &self.timers {
            d = d.min(*t);
        }
        if let Some(r) = self.round_due {
            d = d.min(r);
        }
        d
    }

    fn scaled(&self, ms: i64) -> Duration {
        Duration::from_secs_f64((ms.max(0) as f64 / 1000.0) * self.options.time_scale.max(0.0))
    }

    fn fire_due(&mut self) {
        let now = Instant::now();
        if self.round_due.is_some_and(|r| r <= now) {
            self.round_due = None;
            self.dispatch(Event::RoundComplete);
        }
        let now = Instant::now();
        let (due, keep): (Vec<_>, Vec<_>) = self.timers.drain(..).partition(|(t, _)| *t <= now);
        self.timers = keep;
        for (_, kind) in due {
            let event = match kind {
                TimerKind::InitiationWait => Event::WaitTimeout,
                TimerKind::Reprompt => Event::RepromptTimeout,
            };
            self.dispatch(event);
        }
    }

    fn dispatch(&mut self, event: Event) {
        let now = now_ms();
        // Output produced by this event starts here on the engine clock.
        let from = self.engine.clock_ms().max(now);
        let name = event.name();
        let mut indicator = self.engine.phase().indicator().as_str();
        match self.engine.handle_event(now, event) {
            Ok(actions) => {
                for a in actions {
                    match a {
                        Action::Emit(r) => {
                            if r.event_type == EventType::StateChange {
                                if let Some(i) = r.extra("indicator") {
                                    indicator = match i {
                                        "feedback_blue" => "feedback_blue",
                                        _ => "normal",
                                    };
                                }
                            }
                            self.persist_and_publish(&r, indicator);
                        }
                        Action::StartTimer { timer, after_ms } => {
                            self.timers.push((Instant::now() + self.scaled(after_ms), timer));
                        }
                        Action::ClearTimers => self.timers.clear(),
                        Action::Lifecycle(l) => self.on_lifecycle(l),
                    }
                }
                // Output phases end when the robot has finished speaking.
                self.round_due = match self.engine.phase() {
                    Phase::WakePrompt
                    | Phase::FeedbackMicro
                    | Phase::Demonstration
                    | Phase::FeedbackMacro => {
                        Some(Instant::now() + self.scaled(self.engine.clock_ms() - from))
                    }
                    _ => None,
                };
            }
            Err(e) => log::warn!("dropped {name}: {e}"),
        }
        self.refresh();
    }

    fn persist_and_publish(&mut self, record: &EventRecord, indicator: &str) {
        match self.store.append_event(record) {
            Ok(()) => {
                self.storage_ok = true;
                self.last_ts = self.last_ts.max(record.ts_ms);
                self.bus.publish(record, Some(indicator));
            }
            Err(e) => {
                self.storage_ok = false;
                log::error!("could not persist {:?}: {e}", record.event_type);
            }
        }
    }

    fn on_lifecycle(&mut self, l: Lifecycle) {
        log::info!("{l:?}");
        if let Lifecycle::ConversationCompleted | Lifecycle::ConversationAbandoned = l {
            if let Some(w) = &mut self.window {
                if let Err(e) = w.scheduler.on_conversation_complete(now_ms()) {
                    log::info!("schedule: {e}");
                }
            }
        }
    }

    fn refresh(&self) {
        let snap = Snapshot::of(&self.engine, self.window.as_ref().map(|w| &w.scheduler), self.storage_ok);
        *self.snapshot.write().expect("snapshot lock") = snap;
    }

    /// Epoch bounds of `window` on `date`, local time.
    fn bounds(date: NaiveDate, window: &TrainingWindow) -> Option<(i64, i64)> {
        let at = |t| Local.from_local_datetime(&date.and_time(t)).earliest();
        Some((at(window.start)?.timestamp_millis(), at(window.end)?.timestamp_millis()))
    }

    fn schedule_tick(&mut self) {
        if self.options.windows.is_empty() {
            return;
        }
        let now = now_ms();
        if self.window.is_none() {
            self.open_window(now);
        }
        let Some(w) = &mut self.window else { return };
        let gate = match gate_decision(&self.detector.read(now), now) {
            Ok(g) => g,
            Err(e) => {
                log::warn!("presence: {e}; skipping");
                GateDecision::Skip
            }
        };
        // A conversation started by hand keeps the schedule waiting.
        let idle = self.engine.phase() == Phase::Idle;
        if !idle && now < w.scheduler.state().window_end_ms {
            return;
        }
        match w.scheduler.tick(now, gate) {
            Some(ScheduleAction::StartConversation) => self.dispatch(Event::WakeDue),
            Some(ScheduleAction::Skip) => {
                let ts = now.max(self.last_ts);
                let r = EventRecord::new(ts, self.engine.session_id(), EventType::Skip)
                    .with_extra("reason", "presence");
                let indicator = self.engine.phase().indicator().as_str();
                self.persist_and_publish(&r, indicator);
                self.refresh();
            }
            Some(ScheduleAction::EndWindowFeedback) => {
                let done = (w.date, w.index);
                self.done.push(done);
                self.window = None;
                self.dispatch(Event::WindowEnding);
            }
            None => {}
        }
    }

    fn open_window(&mut self, now: i64) {
        let today = Local::now().date_naive();
        for (index, window) in self.options.windows.iter().enumerate() {
            if self.done.contains(&(today, index)) {
                continue;
            }
            let Some((start, end)) = Self::bounds(today, window) else { continue };
            if !(start..end).contains(&now) {
                continue;
            }
            let seed = self.options.seed
                ^ (today.num_days_from_ce() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                ^ index as u64;
            let target = window.target_or(self.options.target_conversations);
            let mut scheduler = Scheduler::new(start, end, target, seed);
            // Conversations already held this session, e.g. before a restart.
            for _ in 0..self.engine.session_conversations().len() {
                let _ = scheduler.on_conversation_complete(now);
            }
            log::info!("window {index} open until {end}");
            self.window = Some(ActiveWindow { date: today, index, scheduler });
            self.refresh();
            return;
        }
    }
}

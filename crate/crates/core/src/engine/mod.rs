//! The conversation state machine.
//!
//! One engine owns one trainee's sessions. Events are delivered one at a
//! time through [`Engine::handle_event`]; every observable effect comes back
//! as an [`Action`], so the caller decides how records are persisted, how
//! timers are armed and how the UI is told.

mod fading;
mod record;
mod replay;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::observer::{DialogueContext, Guardrail, ObserverVerdict};
use crate::speakers::{
    build_demonstration, generate_macro_feedback, generate_micro_feedback, rephrase_feedback, FeedbackItem,
    ScriptLibrary, SpeakerModel, GREET_SCRIPT,
};
use crate::storage::{EventRecord, EventType};
use crate::text::word_count;
use crate::types::{Criterion, Speaker, ViolationCounts};

pub use fading::{
    initiation_wait, wake_prompt_for, FadingPolicy, PromptLevel, WakeGesture, WakePrompt, FULL_PROMPT,
    SHORT_PROMPT,
};
pub use record::{ConversationRecord, Utterance};
pub use replay::{session_id_for, session_index_of};

pub const MIN_ROUNDS: u32 = 8;
pub const MAX_ROUNDS: u32 = 12;
/// Violations of one criterion within a conversation that trigger a
/// demonstration.
pub const DEMONSTRATION_THRESHOLD: u32 = 3;

/// Pause before the robot starts speaking.
pub const ROBOT_LATENCY_MS: i64 = 600;

const DEFAULT_PERSONA: &str = "You are a friendly social robot practicing casual small talk with \
     an adult. Keep replies light, general and short, and ask simple follow-up questions.";
const FALLBACK_REPLY: &str = "Sorry, I lost my train of thought. What were you saying?";

/// Estimated speaking time: a fixed onset plus ~160 words per minute.
pub fn speech_duration_ms(text: &str) -> i64 {
    300 + 375 * word_count(text) as i64
}

/// Uniform integer in [8, 12].
pub fn sample_round_count<R: Rng + ?Sized>(rng: &mut R) -> u32 {
    rng.random_range(MIN_ROUNDS..=MAX_ROUNDS)
}

/// The criterion to demonstrate, if any reached `threshold` violations.
/// Highest count wins; ties go to the criterion whose latest violation in
/// `history` (oldest first) is most recent.
pub fn should_demonstrate(
    violations: &ViolationCounts,
    history: &[Criterion],
    threshold: u32,
) -> Option<Criterion> {
    let latest = |c: Criterion| history.iter().rposition(|h| *h == c);
    Criterion::ALL
        .into_iter()
        .filter(|c| violations.get(*c) >= threshold.max(1))
        .max_by_key(|c| (violations.get(*c), latest(*c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    WakePrompt,
    AwaitUserGreeting,
    Conversing,
    FeedbackMicro,
    FeedbackMacro,
    Demonstration,
}

impl Phase {
    pub fn accepts_user_input(self) -> bool {
        matches!(self, Phase::AwaitUserGreeting | Phase::Conversing)
    }

    pub fn is_feedback(self) -> bool {
        matches!(self, Phase::FeedbackMicro | Phase::FeedbackMacro | Phase::Demonstration)
    }

    pub fn indicator(self) -> Indicator {
        if self.is_feedback() {
            Indicator::FeedbackBlue
        } else {
            Indicator::Normal
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    Normal,
    FeedbackBlue,
}

impl Indicator {
    pub fn as_str(self) -> &'static str {
        match self {
            Indicator::Normal => "normal",
            Indicator::FeedbackBlue => "feedback_blue",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Event {
    /// The scheduler decided a conversation should start.
    WakeDue,
    UserUtterance {
        text: String,
        eye_contact: Option<bool>,
        /// Speaking time; estimated from the word count when absent.
        duration_ms: Option<i64>,
    },
    /// The user did not greet within the initiation wait.
    WaitTimeout,
    /// The user did not answer the robot's greeting.
    RepromptTimeout,
    /// The robot finished delivering its current output block (wake prompt,
    /// feedback, or demonstration).
    RoundComplete,
    /// The training window is about to close.
    WindowEnding,
}

impl Event {
    pub fn user(text: impl Into<String>) -> Self {
        Event::UserUtterance { text: text.into(), eye_contact: None, duration_ms: None }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Event::WakeDue => "WakeDue",
            Event::UserUtterance { .. } => "UserUtterance",
            Event::WaitTimeout => "WaitTimeout",
            Event::RepromptTimeout => "RepromptTimeout",
            Event::RoundComplete => "RoundComplete",
            Event::WindowEnding => "WindowEnding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimerKind {
    InitiationWait,
    Reprompt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lifecycle {
    ConversationCompleted,
    /// The robot greeted but nobody answered.
    ConversationAbandoned,
    SessionCompleted,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Persist and publish.
    Emit(EventRecord),
    /// Post the matching timeout event after `after_ms` unless cleared.
    StartTimer {
        timer: TimerKind,
        after_ms: i64,
    },
    ClearTimers,
    Lifecycle(Lifecycle),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("event {event} is not legal in phase {phase}")]
    IllegalEvent { phase: Phase, event: &'static str },
}

/// Snapshot of the state machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub phase: Phase,
    pub session_index: u32,
    pub conversation: Option<ConversationRecord>,
    pub rounds_remaining: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub fading: FadingPolicy,
    pub persona: String,
    pub seed: u64,
    pub demonstration_threshold: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            fading: FadingPolicy::default(),
            persona: DEFAULT_PERSONA.to_owned(),
            seed: 0,
            demonstration_threshold: DEMONSTRATION_THRESHOLD,
        }
    }
}

/// Bookkeeping that lives for one session.
#[derive(Debug, Clone, Default)]
struct SessionBook {
    started: bool,
    completed: Vec<ConversationRecord>,
    conversations_opened: u32,
    window_ending: bool,
    greetings_sent: u32,
    user_verdicts: Vec<ObserverVerdict>,
    violation_history: Vec<Criterion>,
}

pub struct Engine {
    guardrail: Arc<dyn Guardrail>,
    speaker: Box<dyn SpeakerModel>,
    feedback_speaker: Option<Box<dyn SpeakerModel>>,
    scripts: ScriptLibrary,
    config: EngineConfig,
    state: EngineState,
    book: SessionBook,
    rng: ChaCha8Rng,
    clock_ms: i64,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("state", &self.state)
            .field("clock_ms", &self.clock_ms)
            .finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(guardrail: Arc<dyn Guardrail>, speaker: Box<dyn SpeakerModel>, config: EngineConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self {
            guardrail,
            speaker,
            feedback_speaker: None,
            scripts: ScriptLibrary::bundled(),
            config,
            state: EngineState {
                phase: Phase::Idle,
                session_index: 0,
                conversation: None,
                rounds_remaining: 0,
            },
            book: SessionBook::default(),
            rng,
            clock_ms: 0,
        }
    }

    /// Rephrase feedback through this model; templates are kept on failure.
    pub fn with_feedback_speaker(mut self, speaker: Box<dyn SpeakerModel>) -> Self {
        self.feedback_speaker = Some(speaker);
        self
    }

    pub fn with_scripts(mut self, scripts: ScriptLibrary) -> Self {
        self.scripts = scripts;
        self
    }

    /// Starts at `session_index` instead of zero.
    pub fn starting_at(mut self, session_index: u32) -> Self {
        self.state.session_index = session_index;
        self
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn session_id(&self) -> String {
        session_id_for(self.state.session_index)
    }

    /// Conversations completed so far in the current session.
    pub fn session_conversations(&self) -> &[ConversationRecord] {
        &self.book.completed
    }

    pub fn window_ending(&self) -> bool {
        self.book.window_ending
    }

    pub fn clock_ms(&self) -> i64 {
        self.clock_ms
    }

    /// Applies one event. Illegal events leave the state untouched.
    pub fn handle_event(&mut self, now_ms: i64, event: Event) -> Result<Vec<Action>, EngineError> {
        use Phase::*;
        let phase = self.state.phase;
        let has_conv = self.state.conversation.is_some();
        let legal = match (&event, phase) {
            (Event::WakeDue, Idle) => true,
            (Event::WindowEnding, p) => p != FeedbackMacro,
            (Event::RoundComplete, WakePrompt | FeedbackMicro | Demonstration | FeedbackMacro) => true,
            (Event::UserUtterance { text, .. }, AwaitUserGreeting | Conversing) => !text.trim().is_empty(),
            (Event::WaitTimeout, AwaitUserGreeting) => !has_conv,
            (Event::RepromptTimeout, AwaitUserGreeting) => has_conv,
            _ => false,
        };
        if !legal {
            let err = EngineError::IllegalEvent { phase, event: event.name() };
            log::warn!("{err}");
            return Err(err);
        }

        self.clock_ms = self.clock_ms.max(now_ms);
        let mut out = Vec::new();
        match (event, phase) {
            (Event::WakeDue, _) => self.on_wake(&mut out),
            (Event::WindowEnding, Idle) => {
                if self.book.started {
                    self.book.window_ending = true;
                    self.enter_macro(&mut out);
                }
            }
            (Event::WindowEnding, WakePrompt | AwaitUserGreeting) => {
                out.push(Action::ClearTimers);
                if has_conv {
                    self.abandon(&mut out, "window_ending");
                }
                self.book.window_ending = true;
                self.enter_macro(&mut out);
            }
            (Event::WindowEnding, _) => self.book.window_ending = true,
            (Event::RoundComplete, WakePrompt) => {
                let wait = initiation_wait(self.state.session_index, &self.config.fading);
                self.transition(&mut out, AwaitUserGreeting, &[]);
                out.push(Action::StartTimer {
                    timer: TimerKind::InitiationWait,
                    after_ms: (wait * 1000.0).round() as i64,
                });
            }
            (Event::RoundComplete, FeedbackMicro) => {
                let conv = self.state.conversation.as_ref();
                let demo = conv.and_then(|c| {
                    should_demonstrate(
                        &c.violations,
                        &self.book.violation_history,
                        self.config.demonstration_threshold,
                    )
                });
                match demo {
                    Some(criterion) => self.demonstrate(&mut out, criterion),
                    None => self.after_conversation(&mut out),
                }
            }
            (Event::RoundComplete, Demonstration) => self.after_conversation(&mut out),
            (Event::RoundComplete, _) => self.close_session(&mut out),
            (Event::WaitTimeout, _) => self.robot_greets(&mut out),
            (Event::RepromptTimeout, _) => {
                if self.book.greetings_sent <= self.config.fading.reprompt_limit {
                    self.greet(&mut out, self.book.greetings_sent as usize);
                    out.push(Action::StartTimer {
                        timer: TimerKind::Reprompt,
                        after_ms: (self.config.fading.reprompt_after_s * 1000.0).round() as i64,
                    });
                } else {
                    self.abandon(&mut out, "no_response");
                    self.after_abandon(&mut out);
                }
            }
            (Event::UserUtterance { text, eye_contact, duration_ms }, p) => {
                let duration = duration_ms.unwrap_or_else(|| speech_duration_ms(&text)).max(0);
                if p == AwaitUserGreeting {
                    self.user_greets(&mut out, text, eye_contact, duration);
                } else {
                    self.user_converses(&mut out, text, eye_contact, duration);
                }
            }
        }
        Ok(out)
    }

    fn record(&self, event_type: EventType) -> EventRecord {
        let mut r = EventRecord::new(self.clock_ms, self.session_id(), event_type);
        if let Some(c) = &self.state.conversation {
            r.conversation_id = Some(c.id.clone());
        }
        r
    }

    fn transition(&mut self, out: &mut Vec<Action>, to: Phase, extra: &[(&str, String)]) {
        let from = self.state.phase;
        self.state.phase = to;
        if to != Phase::Conversing {
            self.state.rounds_remaining = 0;
        }
        let mut r = self
            .record(EventType::StateChange)
            .with_extra("from", from)
            .with_extra("to", to)
            .with_extra("indicator", to.indicator().as_str());
        if to.is_feedback() {
            r = r.with_extra("voice", "formal");
        }
        for (k, v) in extra {
            r = r.with_extra(k, v);
        }
        out.push(Action::Emit(r));
    }

    fn on_wake(&mut self, out: &mut Vec<Action>) {
        self.book.started = true;
        let prompt = wake_prompt_for(self.state.session_index, &self.config.fading);
        self.transition(out, Phase::WakePrompt, &[]);
        let mut r = self.record(EventType::Wake).with_extra("gesture", "look_up").with_extra(
            "prompt_level",
            match prompt.level {
                PromptLevel::Full => "full",
                PromptLevel::Short => "short",
                PromptLevel::Silent => "silent",
            },
        );
        if let Some(v) = prompt.verbal {
            r.text = Some(v.to_owned());
            self.clock_ms += speech_duration_ms(v);
        }
        out.push(Action::Emit(r));
    }

    fn open_conversation(&mut self, initiated_by: Speaker) {
        self.book.conversations_opened += 1;
        self.book.greetings_sent = 0;
        self.book.user_verdicts.clear();
        self.book.violation_history.clear();
        let id = format!("{}-c{:02}", self.session_id(), self.book.conversations_opened);
        let budget = sample_round_count(&mut self.rng);
        self.state.conversation =
            Some(ConversationRecord::new(id, self.session_id(), initiated_by, budget, self.clock_ms));
    }

    fn conversation_extras(&self) -> Vec<(&'static str, String)> {
        let c = self.state.conversation.as_ref().expect("conversation open");
        vec![("initiated_by", c.initiated_by.to_string()), ("round_budget", c.round_budget.to_string())]
    }

    #[allow(clippy::too_many_arguments)]
    fn push_utterance(
        &mut self,
        out: &mut Vec<Action>,
        speaker: Speaker,
        text: String,
        start_ms: i64,
        duration_ms: i64,
        eye_contact: Option<bool>,
        extra: &[(&str, String)],
    ) {
        let session_id = self.session_id();
        let conv = self.state.conversation.as_mut().expect("conversation open");
        let turn = conv.utterances.len() as u32;
        let mut r = EventRecord::utterance(
            start_ms,
            session_id,
            conv.id.clone(),
            turn,
            speaker,
            text.clone(),
            duration_ms,
        );
        r.eye_contact = eye_contact;
        for (k, v) in extra {
            r = r.with_extra(k, v);
        }
        conv.utterances.push(
            Utterance::new(speaker, text, start_ms, start_ms + duration_ms).with_eye_contact(eye_contact),
        );
        self.clock_ms = start_ms + duration_ms;
        out.push(Action::Emit(r));
    }

    fn greet(&mut self, out: &mut Vec<Action>, script_line: usize) {
        let lines = self.scripts.lines(GREET_SCRIPT).unwrap_or(&[]);
        let text = lines
            .get(script_line.min(lines.len().saturating_sub(1)))
            .cloned()
            .unwrap_or_else(|| "Hi! How's your day going?".to_owned());
        self.book.greetings_sent += 1;
        let start = self.clock_ms + ROBOT_LATENCY_MS;
        let duration = speech_duration_ms(&text);
        self.push_utterance(out, Speaker::Robot, text, start, duration, None, &[("kind", "greeting".into())]);
        if let Some(c) = self.state.conversation.as_mut() {
            c.greeting_utterances = c.utterances.len();
        }
    }

    fn robot_greets(&mut self, out: &mut Vec<Action>) {
        self.open_conversation(Speaker::Robot);
        let extras = self.conversation_extras();
        let mut r = self.record(EventType::StateChange).with_extra("event", "conversation_started");
        for (k, v) in extras {
            r = r.with_extra(k, v);
        }
        out.push(Action::Emit(r));
        self.greet(out, 0);
        out.push(Action::StartTimer {
            timer: TimerKind::Reprompt,
            after_ms: (self.config.fading.reprompt_after_s * 1000.0).round() as i64,
        });
    }

    fn abandon(&mut self, out: &mut Vec<Action>, reason: &str) {
        if self.state.conversation.is_some() {
            let r = self
                .record(EventType::StateChange)
                .with_extra("event", "conversation_abandoned")
                .with_extra("reason", reason);
            self.state.conversation = None;
            out.push(Action::Emit(r));
            out.push(Action::Lifecycle(Lifecycle::ConversationAbandoned));
        }
    }

    fn after_abandon(&mut self, out: &mut Vec<Action>) {
        if self.book.window_ending {
            self.enter_macro(out);
        } else {
            self.transition(out, Phase::Idle, &[]);
        }
    }

    fn user_start(&self) -> i64 {
        self.clock_ms
    }

    fn user_greets(&mut self, out: &mut Vec<Action>, text: String, eye_contact: Option<bool>, duration: i64) {
        out.push(Action::ClearTimers);
        let user_initiated = self.state.conversation.is_none();
        if user_initiated {
            self.open_conversation(Speaker::User);
        }
        let start = self.user_start();
        self.push_utterance(
            out,
            Speaker::User,
            text,
            start,
            duration,
            eye_contact,
            &[("kind", "greeting".into())],
        );
        let mut extras = self.conversation_extras();
        extras.push(("event", "conversation_started".into()));
        if let Some(c) = self.state.conversation.as_mut() {
            c.greeting_utterances = c.utterances.len();
        }
        self.transition(out, Phase::Conversing, &extras);
        // The robot's answer to a user greeting closes the greeting exchange;
        // after a robot greeting, the robot opens round one.
        let kind = if user_initiated { "greeting" } else { "reply" };
        self.robot_replies(out, kind);
        if user_initiated {
            if let Some(c) = self.state.conversation.as_mut() {
                c.greeting_utterances = c.utterances.len();
            }
        }
        self.update_rounds(out);
    }

    fn user_converses(
        &mut self,
        out: &mut Vec<Action>,
        text: String,
        eye_contact: Option<bool>,
        duration: i64,
    ) {
        let context = self.context();
        let verdict = self.guardrail.evaluate(&text, &context);
        let failed: Vec<Criterion> = verdict.failed().collect();
        let start = self.user_start();
        let failed_list = failed.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(",");
        self.push_utterance(
            out,
            Speaker::User,
            text,
            start,
            duration,
            eye_contact,
            &[("kind", "reply".into()), ("failed", failed_list)],
        );
        if let Some(c) = self.state.conversation.as_mut() {
            for f in &failed {
                c.violations.increment(*f);
            }
        }
        self.book.violation_history.extend(failed);
        self.book.user_verdicts.push(verdict);

        if self.completed_rounds() < self.budget() {
            self.robot_replies(out, "reply");
        }
        self.update_rounds(out);
    }

    fn budget(&self) -> u32 {
        self.state.conversation.as_ref().map_or(0, |c| c.round_budget)
    }

    fn completed_rounds(&self) -> u32 {
        let Some(c) = &self.state.conversation else {
            return 0;
        };
        let post = c.post_greeting();
        let robot = post.iter().filter(|u| u.speaker == Speaker::Robot).count();
        let user = post.len() - robot;
        robot.min(user) as u32
    }

    fn update_rounds(&mut self, out: &mut Vec<Action>) {
        let done = self.completed_rounds();
        self.state.rounds_remaining = self.budget().saturating_sub(done);
        if done >= self.budget() {
            self.finish_conversation(out);
        }
    }

    fn context(&self) -> DialogueContext {
        let mut ctx = DialogueContext::new();
        if let Some(c) = &self.state.conversation {
            for u in &c.utterances {
                ctx.push(u.speaker, u.text.clone());
            }
        }
        ctx
    }

    fn robot_replies(&mut self, out: &mut Vec<Action>, kind: &str) {
        let context = self.context();
        let (text, extra) =
            match self.guardrail.mediate(&context, self.speaker.as_mut(), &self.config.persona) {
                Ok(m) => (
                    m.text.clone(),
                    vec![
                        ("kind", kind.to_owned()),
                        ("attempts", m.attempts.to_string()),
                        ("observer_pass", m.passed.to_string()),
                    ],
                ),
                Err(e) => {
                    log::error!("observer loop failed: {e}");
                    (
                        FALLBACK_REPLY.to_owned(),
                        vec![("kind", kind.to_owned()), ("fallback", "true".to_owned())],
                    )
                }
            };
        let start = self.clock_ms + ROBOT_LATENCY_MS;
        let duration = speech_duration_ms(&text);
        self.push_utterance(out, Speaker::Robot, text, start, duration, None, &extra);
    }

    fn finish_conversation(&mut self, out: &mut Vec<Action>) {
        let clock = self.clock_ms;
        let Some(conv) = self.state.conversation.as_mut() else {
            return;
        };
        conv.ended_at = Some(clock);
        let conv = conv.clone();
        self.transition(out, Phase::FeedbackMicro, &[]);

        let mut item = generate_micro_feedback(&conv, &self.book.user_verdicts);
        if let Some(s) = self.feedback_speaker.as_mut() {
            item = rephrase_feedback(&item, s.as_mut());
        }
        let mut r = self
            .feedback_record(EventType::FeedbackMicro, &item)
            .with_extra("initiated_by", conv.initiated_by)
            .with_extra("round_budget", conv.round_budget)
            .with_extra("greeting_utterances", conv.greeting_utterances)
            .with_extra("started_at", conv.started_at);
        for c in Criterion::ALL {
            r = r.with_extra(&format!("violations.{c}"), conv.violations.get(c));
        }
        self.clock_ms += speech_duration_ms(&item.spoken);
        out.push(Action::Emit(r));
        self.book.completed.push(conv);
        out.push(Action::Lifecycle(Lifecycle::ConversationCompleted));
    }

    fn feedback_record(&self, kind: EventType, item: &FeedbackItem) -> EventRecord {
        let improvements = item
            .improvements
            .iter()
            .map(|i| i.criterion.map_or("none", |c| c.as_str()))
            .collect::<Vec<_>>()
            .join(",");
        self.record(kind)
            .with_text(item.spoken.clone())
            .with_extra("praise", &item.praise)
            .with_extra("improvements", improvements)
    }

    fn demonstrate(&mut self, out: &mut Vec<Action>, criterion: Criterion) {
        self.transition(out, Phase::Demonstration, &[("criterion", criterion.to_string())]);
        let script = build_demonstration(criterion);
        for (i, line) in script.exchanges.iter().enumerate() {
            let r = self
                .record(EventType::DemonstrationLine)
                .with_text(line.line.clone())
                .with_extra("character", format!("{:?}", line.character))
                .with_extra("voice", line.character.voice())
                .with_extra("criterion", criterion)
                .with_extra("line_index", i);
            self.clock_ms += speech_duration_ms(&line.line);
            out.push(Action::Emit(r));
        }
    }

    fn after_conversation(&mut self, out: &mut Vec<Action>) {
        self.state.conversation = None;
        if self.book.window_ending {
            self.enter_macro(out);
        } else {
            self.transition(out, Phase::Idle, &[]);
        }
    }

    fn enter_macro(&mut self, out: &mut Vec<Action>) {
        match generate_macro_feedback(&self.book.completed) {
            Ok(mut item) => {
                if let Some(s) = self.feedback_speaker.as_mut() {
                    item = rephrase_feedback(&item, s.as_mut());
                }
                self.transition(out, Phase::FeedbackMacro, &[]);
                let r = self.feedback_record(EventType::FeedbackMacro, &item);
                self.clock_ms += speech_duration_ms(&item.spoken);
                out.push(Action::Emit(r));
            }
            Err(_) => {
                // Nothing to summarize: close the session without feedback.
                self.close_session(out);
            }
        }
    }

    fn close_session(&mut self, out: &mut Vec<Action>) {
        let had_session = self.book.started || !self.book.completed.is_empty();
        self.state.conversation = None;
        let conversations = self.book.completed.len();
        self.transition(
            out,
            Phase::Idle,
            &[("event", "session_closed".into()), ("conversations", conversations.to_string())],
        );
        if had_session {
            out.push(Action::Lifecycle(Lifecycle::SessionCompleted));
        }
        self.state.session_index += 1;
        self.book = SessionBook::default();
    }
}

#[cfg(test)]
mod tests;

//! When conversations happen inside a training window.
//!
//! Gaps between conversations are drawn from a truncated Gaussian whose mean
//! is the remaining window time divided by the conversations still owed. A
//! skipped slot keeps the owed count and lets the mean shrink, so skipped
//! conversations are made up later in the same window.

use chrono::NaiveTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::presence::GateDecision;

pub const DEFAULT_TARGET_CONVERSATIONS: u32 = 10;
pub const DEFAULT_MAX_WINDOW_HOURS: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("training window exhausted")]
    WindowExhausted,
    #[error("no conversations remaining")]
    NothingRemaining,
}

/// A daily window, in local time of day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingWindow {
    #[serde(with = "hhmm")]
    pub start: NaiveTime,
    #[serde(with = "hhmm")]
    pub end: NaiveTime,
    /// Conversations per window; the config-wide target when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<u32>,
}

impl TrainingWindow {
    pub fn new(start: NaiveTime, end: NaiveTime) -> Self {
        Self { start, end, target: None }
    }

    pub fn duration_s(&self) -> f64 {
        (self.end - self.start).num_milliseconds() as f64 / 1000.0
    }

    pub fn target_or(&self, default: u32) -> u32 {
        self.target.unwrap_or(default)
    }

    /// Checks ordering, length and target. Errors name the offending field.
    pub fn validate(&self, max_hours: f64) -> Result<(), (&'static str, String)> {
        if self.end <= self.start {
            return Err(("end", "must be after start".into()));
        }
        if self.duration_s() > max_hours * 3600.0 {
            return Err(("end", format!("window longer than {max_hours} hours")));
        }
        if self.target == Some(0) {
            return Err(("target", "must be positive".into()));
        }
        Ok(())
    }
}

mod hhmm {
    use chrono::NaiveTime;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &NaiveTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.format("%H:%M").to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveTime, D::Error> {
        let raw = String::deserialize(d)?;
        NaiveTime::parse_from_str(&raw, "%H:%M")
            .map_err(|e| D::Error::custom(format!("expected HH:MM, got {raw:?}: {e}")))
    }
}

/// Mean, standard deviation and truncation bounds of the next gap, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalBounds {
    pub mean: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

impl IntervalBounds {
    pub fn new(remaining_time_s: f64, remaining_count: u32) -> Result<Self, SchedulerError> {
        if remaining_time_s.is_nan() || remaining_time_s <= 0.0 {
            return Err(SchedulerError::WindowExhausted);
        }
        if remaining_count == 0 {
            return Err(SchedulerError::NothingRemaining);
        }
        let mean = remaining_time_s / f64::from(remaining_count);
        Ok(Self { mean, sigma: mean / 4.0, lo: mean / 4.0, hi: (2.0 * mean).min(remaining_time_s) })
    }
}

/// Draws the next gap from Normal(μ, μ/4) truncated to [μ/4, min(2μ, remaining)].
pub fn next_interval<R: Rng + ?Sized>(
    remaining_time_s: f64,
    remaining_count: u32,
    rng: &mut R,
) -> Result<f64, SchedulerError> {
    let b = IntervalBounds::new(remaining_time_s, remaining_count)?;
    let normal = Normal::new(b.mean, b.sigma).expect("sigma is positive and finite");
    // The window spans at least [-3σ, +1σ] around μ, so rejection ends fast.
    for _ in 0..64 {
        let x = normal.sample(rng);
        if (b.lo..=b.hi).contains(&x) {
            return Ok(x);
        }
    }
    Ok(normal.sample(rng).clamp(b.lo, b.hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleAction {
    StartConversation,
    Skip,
    EndWindowFeedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleStatus {
    Waiting,
    InConversation,
    /// The target was met or no time remains; macro feedback comes next.
    FeedbackDue,
    Finished,
}

/// Progress through one window occurrence. Times are epoch milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleState {
    pub window_start_ms: i64,
    pub window_end_ms: i64,
    pub target: u32,
    pub completed: u32,
    pub skipped: u32,
    pub next_due_ms: i64,
    pub status: ScheduleStatus,
}

impl ScheduleState {
    pub fn remaining_count(&self) -> u32 {
        self.target.saturating_sub(self.completed)
    }

    pub fn remaining_time_s(&self, now_ms: i64) -> f64 {
        (self.window_end_ms - now_ms) as f64 / 1000.0
    }
}

/// Owns a window's schedule and its random stream.
#[derive(Debug, Clone)]
pub struct Scheduler {
    state: ScheduleState,
    rng: ChaCha8Rng,
    intervals: Vec<f64>,
}

impl Scheduler {
    pub fn new(window_start_ms: i64, window_end_ms: i64, target: u32, seed: u64) -> Self {
        let mut s = Self {
            state: ScheduleState {
                window_start_ms,
                window_end_ms,
                target,
                completed: 0,
                skipped: 0,
                next_due_ms: window_start_ms,
                status: ScheduleStatus::Waiting,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            intervals: Vec::new(),
        };
        if target == 0 || s.reschedule(window_start_ms).is_err() {
            s.state.status = ScheduleStatus::FeedbackDue;
        }
        s
    }

    pub fn state(&self) -> &ScheduleState {
        &self.state
    }

    /// Every gap drawn so far, seconds.
    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    fn reschedule(&mut self, now_ms: i64) -> Result<(), SchedulerError> {
        let gap =
            next_interval(self.state.remaining_time_s(now_ms), self.state.remaining_count(), &mut self.rng)?;
        self.intervals.push(gap);
        let gap_ms = ((gap * 1000.0).round() as i64).max(1);
        self.state.next_due_ms = (now_ms + gap_ms).max(self.state.next_due_ms + 1);
        self.state.status = ScheduleStatus::Waiting;
        Ok(())
    }

    /// Decides what to do at `now_ms`, given the presence gate.
    pub fn tick(&mut self, now_ms: i64, gate: GateDecision) -> Option<ScheduleAction> {
        match self.state.status {
            ScheduleStatus::Finished => return None,
            ScheduleStatus::FeedbackDue => {
                self.state.status = ScheduleStatus::Finished;
                return Some(ScheduleAction::EndWindowFeedback);
            }
            _ => {}
        }
        if now_ms >= self.state.window_end_ms {
            self.state.status = ScheduleStatus::Finished;
            return Some(ScheduleAction::EndWindowFeedback);
        }
        if self.state.status == ScheduleStatus::InConversation || now_ms < self.state.next_due_ms {
            return None;
        }
        match gate {
            GateDecision::Engage => {
                self.state.status = ScheduleStatus::InConversation;
                Some(ScheduleAction::StartConversation)
            }
            GateDecision::Skip => {
                if let Err(e) = self.on_skip(now_ms) {
                    log::info!("after skip: {e}");
                }
                Some(ScheduleAction::Skip)
            }
        }
    }

    /// A due conversation was gated off. The owed count stays, so the next
    /// gap is drawn over less time.
    pub fn on_skip(&mut self, now_ms: i64) -> Result<(), SchedulerError> {
        self.state.skipped += 1;
        self.reschedule(now_ms).inspect_err(|_| {
            self.state.status = ScheduleStatus::FeedbackDue;
        })
    }

    /// The conversation started by the last `StartConversation` ended.
    pub fn on_conversation_complete(&mut self, now_ms: i64) -> Result<(), SchedulerError> {
        self.state.completed += 1;
        if self.state.remaining_count() == 0 {
            self.state.status = ScheduleStatus::FeedbackDue;
            return Ok(());
        }
        self.reschedule(now_ms).inspect_err(|_| {
            self.state.status = ScheduleStatus::FeedbackDue;
        })
    }
}

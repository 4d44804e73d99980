//! Fading wake prompts and the growing wait for the user to greet first.

use serde::{Deserialize, Serialize};

pub const FULL_PROMPT: &str = "The training window has started. Remember to make eye contact and greet me.";
pub const SHORT_PROMPT: &str = "The training window has started.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadingPolicy {
    /// Sessions that open with the full verbal prompt.
    pub full_prompt_sessions: u32,
    /// Sessions after those that get the short prompt; later ones are silent.
    pub short_prompt_sessions: u32,
    pub wait_base_s: f64,
    pub wait_slope: f64,
    pub wait_max_s: f64,
    pub reprompt_after_s: f64,
    pub reprompt_limit: u32,
}

impl Default for FadingPolicy {
    fn default() -> Self {
        Self {
            full_prompt_sessions: 2,
            short_prompt_sessions: 3,
            wait_base_s: 5.0,
            wait_slope: 1.0,
            wait_max_s: 60.0,
            reprompt_after_s: 20.0,
            reprompt_limit: 1,
        }
    }
}

impl FadingPolicy {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.wait_base_s) {
            return Err(("wait_base_s", "must be positive".into()));
        }
        if !(self.wait_slope.is_finite() && self.wait_slope >= 0.0) {
            return Err(("wait_slope", "must be nonnegative".into()));
        }
        if !positive(self.wait_max_s) || self.wait_max_s < self.wait_base_s {
            return Err(("wait_max_s", "must be at least wait_base_s".into()));
        }
        if !positive(self.reprompt_after_s) {
            return Err(("reprompt_after_s", "must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WakeGesture {
    /// Look up from the idle pose toward the user.
    LookUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptLevel {
    Full,
    Short,
    Silent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WakePrompt {
    pub gesture: WakeGesture,
    pub level: PromptLevel,
    pub verbal: Option<&'static str>,
}

pub fn wake_prompt_for(session_index: u32, policy: &FadingPolicy) -> WakePrompt {
    let full_end = policy.full_prompt_sessions;
    let short_end = full_end.saturating_add(policy.short_prompt_sessions);
    let (level, verbal) = if session_index < full_end {
        (PromptLevel::Full, Some(FULL_PROMPT))
    } else if session_index < short_end {
        (PromptLevel::Short, Some(SHORT_PROMPT))
    } else {
        (PromptLevel::Silent, None)
    };
    WakePrompt { gesture: WakeGesture::LookUp, level, verbal }
}

/// Seconds to wait for the user to greet first in session `n`:
/// `min(max, base * (1 + slope * n * ln(1 + n)))`.
pub fn initiation_wait(n: u32, policy: &FadingPolicy) -> f64 {
    let n = f64::from(n);
    let grown = policy.wait_base_s * (1.0 + policy.wait_slope * n * n.ln_1p());
    grown.min(policy.wait_max_s)
}
